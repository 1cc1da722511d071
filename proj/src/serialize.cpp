#include "rewardlab/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace rewardlab {

namespace {

constexpr char kMagic[] = "NRLB1";
constexpr std::size_t kMagicLen = 5;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw std::runtime_error("parameter file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  pos += 8;
  return v;
}

}  // namespace

std::string encode_parameters(const ParameterBlob& blob) {
  std::string out(kMagic, kMagicLen);
  put_u64(out, blob.layer_sizes.size());
  for (int s : blob.layer_sizes) put_u64(out, static_cast<std::uint64_t>(s));
  put_u64(out, static_cast<std::uint64_t>(blob.values.size()));
  for (Eigen::Index i = 0; i < blob.values.size(); ++i)
    put_u64(out, std::bit_cast<std::uint64_t>(blob.values[i]));
  return out;
}

ParameterBlob decode_parameters(const std::string& in) {
  if (in.size() < kMagicLen || in.compare(0, kMagicLen, kMagic) != 0)
    throw std::runtime_error("not an NRLB1 parameter file");
  std::size_t pos = kMagicLen;
  ParameterBlob blob;
  const auto layers = get_u64(in, pos);
  if (layers > (in.size() - pos) / 8) throw std::runtime_error("parameter file truncated");
  for (std::uint64_t i = 0; i < layers; ++i) blob.layer_sizes.push_back(static_cast<int>(get_u64(in, pos)));
  const auto count = get_u64(in, pos);
  if (count > (in.size() - pos) / 8) throw std::runtime_error("parameter file truncated");
  blob.values.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    blob.values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_u64(in, pos));
  if (pos != in.size()) throw std::runtime_error("trailing bytes after parameter data");
  return blob;
}

void save_parameters(const std::filesystem::path& path, const ParameterBlob& blob) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_parameters(blob);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

ParameterBlob load_parameters(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_parameters(bytes);
}

}  // namespace rewardlab
