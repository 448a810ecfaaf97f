#include <bit>
#include <cstring>

#include "actforge/errors.hpp"
#include "actforge/policy.hpp"
#include "json_io.hpp"

namespace actforge::policy {
namespace {

constexpr char kMagic[8] = {'A', 'C', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::size_t kHeaderBytes = 8 + 3 * 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string checkpoint_bytes(const PolicyParams& params) {
  std::string out(kMagic, sizeof(kMagic));
  out.reserve(kHeaderBytes + 8 * params.dim());
  put_u64(out, params.dim());
  put_u64(out, params.version_tag());
  put_u64(out, params.seed());
  for (double w : params.weights()) put_u64(out, std::bit_cast<std::uint64_t>(w));
  return out;
}

PolicyParams checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("not an actforge checkpoint");
  const std::uint64_t dim = get_u64(bytes, 8);
  const std::uint64_t version = get_u64(bytes, 16);
  const std::uint64_t seed = get_u64(bytes, 24);
  if (dim == 0 || bytes.size() != kHeaderBytes + 8 * dim)
    throw DataError("checkpoint size does not match its header (dim=" + std::to_string(dim) + ")");
  std::vector<double> w(dim);
  for (std::size_t i = 0; i < dim; ++i) w[i] = std::bit_cast<double>(get_u64(bytes, kHeaderBytes + 8 * i));
  PolicyParams p(std::move(w), version, seed);
  try {
    p.check_finite();
  } catch (const NumericError& e) {
    throw NumericError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

void save_checkpoint(const PolicyParams& params, const std::string& path) {
  jsonio::write_text_file(path, checkpoint_bytes(params));
}

PolicyParams load_checkpoint(const std::string& path) { return checkpoint_from_bytes(jsonio::read_text_file(path)); }

}  // namespace actforge::policy
