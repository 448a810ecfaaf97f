#pragma once

#include <string>

#include "actforge/textenv.hpp"

namespace actforge::checks {

// Two small hand-written houses: "house-a" (ID) and "house-b" (OOD).
inline const char* kSmallHouseJson = R"({
  "env": "gridhouse",
  "max_steps": 30,
  "history_window": 3,
  "gamma": 0.99,
  "layouts": [
    {"id": "house-a", "split": "id",
     "receptacles": [
       {"name": "countertop 1", "type": "countertop", "openable": false},
       {"name": "cabinet 1", "type": "cabinet", "openable": true},
       {"name": "sinkbasin 1", "type": "sinkbasin", "openable": false},
       {"name": "microwave 1", "type": "microwave", "openable": true},
       {"name": "fridge 1", "type": "fridge", "openable": true}],
     "objects": [
       {"name": "cloth 1", "class": "cloth", "receptacle": "countertop 1"},
       {"name": "apple 1", "class": "apple", "receptacle": "fridge 1"},
       {"name": "mug 1", "class": "mug", "receptacle": "cabinet 1"}]},
    {"id": "house-b", "split": "ood",
     "receptacles": [
       {"name": "shelf 1", "type": "shelf", "openable": false},
       {"name": "drawer 1", "type": "drawer", "openable": true},
       {"name": "sinkbasin 1", "type": "sinkbasin", "openable": false},
       {"name": "microwave 1", "type": "microwave", "openable": true}],
     "objects": [
       {"name": "apple 1", "class": "apple", "receptacle": "drawer 1"},
       {"name": "cloth 1", "class": "cloth", "receptacle": "shelf 1"},
       {"name": "cup 1", "class": "cup", "receptacle": "shelf 1"}]}
  ],
  "tasks": [
    {"task_id": "put-clean-cloth-cabinet", "layout_id": "house-a", "family": "pick_clean_place",
     "goal": {"object_class": "cloth", "target": "cabinet 1", "need_clean": true, "need_hot": false},
     "description": "put a clean cloth in/on cabinet 1.", "split": "id"},
    {"task_id": "put-hot-apple-countertop", "layout_id": "house-a", "family": "pick_heat_place",
     "goal": {"object_class": "apple", "target": "countertop 1", "need_clean": false, "need_hot": true},
     "description": "put a hot apple in/on countertop 1.", "split": "id"},
    {"task_id": "hold-mug", "layout_id": "house-a", "family": "pick_hold",
     "goal": {"object_class": "mug", "target": "", "need_clean": false, "need_hot": false},
     "description": "find a mug and hold it.", "split": "id"},
    {"task_id": "put-cleanhot-apple-shelf", "layout_id": "house-b", "family": "pick_clean_heat_place",
     "goal": {"object_class": "apple", "target": "shelf 1", "need_clean": true, "need_hot": true},
     "description": "put a clean and hot apple in/on shelf 1.", "split": "ood"}
  ]
})";

inline textenv::EnvConfig small_house() { return textenv::env_config_from_json_text(kSmallHouseJson); }

}  // namespace actforge::checks
