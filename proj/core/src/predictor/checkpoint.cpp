#include "rdfl/predictor/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "rdfl/error.hpp"

namespace rdfl::predictor {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'D', 'F', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) fail(ErrorCode::kParseError, "checkpoint truncated");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return value;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kParseError, "checkpoint truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  const double* data;
  std::size_t size;
};

std::vector<NamedTensor> tensors_of(const MlpParams& params) {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const Matrix& w = params.weights[l];
    out.push_back({"layer" + std::to_string(l) + ".weight", {w.rows(), w.cols()}, w.data(),
                   w.rows() * w.cols()});
    const Vector& b = params.biases[l];
    out.push_back({"layer" + std::to_string(l) + ".bias", {b.size()}, b.data(), b.size()});
  }
  return out;
}

std::string output_name(OutputTransform t) {
  return t == OutputTransform::kSoftplus ? "softplus" : "identity";
}

}  // namespace

nlohmann::json checkpoint_manifest(const MlpParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = kMagic.size() + 8;
  for (const auto& t : tensors_of(params)) {
    offset += 4 + t.name.size() + 4 + 8 * t.shape.size();
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"dtype", "f64le"}});
    offset += 8 * t.size;
  }
  return {
      {"format", "rdfl-checkpoint"},
      {"version", kVersion},
      {"layer_dims", params.layer_dims},
      {"decision_dim", params.decision_dim},
      {"leaky_slope", params.leaky_slope},
      {"output", output_name(params.output)},
      {"output_scale", params.output_scale},
      {"input_scale", params.input_scale.values()},
      {"tensors", tensors},
  };
}

void save_checkpoint(const MlpParams& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path) {
  params.validate();
  std::string bytes(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(bytes, kVersion);
  const auto tensors = tensors_of(params);
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(t.name.size()));
    bytes += t.name;
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_le<std::uint64_t>(bytes, d);
    for (std::size_t i = 0; i < t.size; ++i) put_f64(bytes, t.data[i]);
  }
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) fail(ErrorCode::kIoError, "cannot write " + bin_path.string());
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

  std::ofstream manifest(manifest_path);
  if (!manifest) fail(ErrorCode::kIoError, "cannot write " + manifest_path.string());
  manifest << checkpoint_manifest(params).dump(2) << '\n';
}

MlpParams load_checkpoint(const std::filesystem::path& bin_path,
                          const std::filesystem::path& manifest_path) {
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) fail(ErrorCode::kIoError, "cannot read " + manifest_path.string());
  const auto manifest = nlohmann::json::parse(manifest_in, nullptr, false);
  if (manifest.is_discarded()) fail(ErrorCode::kParseError, "malformed checkpoint manifest");

  MlpShape shape;
  const auto dims = manifest.at("layer_dims").get<std::vector<std::size_t>>();
  if (dims.size() < 2) fail(ErrorCode::kParseError, "manifest layer_dims too short");
  shape.decision_dim = manifest.at("decision_dim").get<std::size_t>();
  shape.feature_dim = dims.front() - shape.decision_dim;
  shape.hidden.assign(dims.begin() + 1, dims.end() - 1);
  MlpParams params = make_mlp(shape, manifest.at("output") == "softplus"
                                         ? OutputTransform::kSoftplus
                                         : OutputTransform::kIdentity);
  params.leaky_slope = manifest.at("leaky_slope").get<double>();
  params.output_scale = manifest.at("output_scale").get<double>();
  params.input_scale = Vector(manifest.at("input_scale").get<std::vector<double>>());

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) fail(ErrorCode::kIoError, "cannot read " + bin_path.string());
  Reader reader(std::string(std::istreambuf_iterator<char>(bin), {}));
  if (reader.get_bytes(kMagic.size()) != std::string(kMagic.begin(), kMagic.end()))
    fail(ErrorCode::kParseError, "bad checkpoint magic");
  if (reader.get<std::uint32_t>() != kVersion) fail(ErrorCode::kParseError, "unsupported checkpoint version");
  const auto count = reader.get<std::uint32_t>();
  if (count != 2 * params.layer_count()) fail(ErrorCode::kParseError, "checkpoint tensor count mismatch");

  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = reader.get_bytes(reader.get<std::uint32_t>());
    const auto ndim = reader.get<std::uint32_t>();
    std::vector<std::uint64_t> shape_dims(ndim);
    for (auto& d : shape_dims) d = reader.get<std::uint64_t>();
    const std::size_t layer = t / 2;
    const bool is_weight = t % 2 == 0;
    const std::string expected = "layer" + std::to_string(layer) + (is_weight ? ".weight" : ".bias");
    if (name != expected) fail(ErrorCode::kParseError, "unexpected tensor " + name);
    double* dst = is_weight ? params.weights[layer].data() : params.biases[layer].data();
    const std::size_t size = is_weight
                                 ? params.weights[layer].rows() * params.weights[layer].cols()
                                 : params.biases[layer].size();
    std::uint64_t product = 1;
    for (auto d : shape_dims) product *= d;
    if (product != size) fail(ErrorCode::kParseError, "tensor " + name + " shape mismatch");
    for (std::size_t i = 0; i < size; ++i) dst[i] = reader.get_f64();
  }
  if (!reader.done()) fail(ErrorCode::kParseError, "trailing bytes in checkpoint");
  params.validate();
  return params;
}

}  // namespace rdfl::predictor
