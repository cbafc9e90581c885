#include "grcan/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "grcan/errors.hpp"

namespace grcan {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
  Reader(const std::uint8_t* data, std::size_t n, std::string origin)
      : data_(data), n_(n), origin_(std::move(origin)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }

  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == n_; }

private:
  void need(std::size_t k) {
    if (pos_ + k > n_) {
      throw LengthError(origin_ + ": payload truncated at byte " + std::to_string(pos_));
    }
  }

  const std::uint8_t* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
  std::string origin_;
};

// State tensors in serialization order: every trainable parameter, then
// the scaler buffers.
void serialize_tensors(Model& model, std::vector<std::uint8_t>& out) {
  const auto params = model.parameters();
  const Scaler& sc = model.scaler();
  put_u32(out, static_cast<std::uint32_t>(params.size() + 2));
  auto put_tensor = [&out](const std::string& name, const std::vector<std::size_t>& shape,
                           const std::vector<double>& values) {
    put_string(out, name);
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put_u64(out, d);
    for (double v : values) put_f64(out, v);
  };
  for (const Parameter* p : params) {
    put_tensor(p->name, p->value.shape(), p->value.values());
  }
  put_tensor("scaler/min", {sc.mins.size()}, sc.mins);
  put_tensor("scaler/max", {sc.maxs.size()}, sc.maxs);
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(Model& model) {
  std::vector<std::uint8_t> payload;
  const std::string cfg_json =
      model_config_to_json(model.config(), model.class_names(), model.dataset_kind());
  put_string(payload, cfg_json);
  put_u64(payload, model.seed());
  put_u32(payload, model.epochs_trained());
  serialize_tensors(model, payload);

  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 28);
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
  put_u32(out, kCheckpointVersion);
  put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  put_u64(out, detail::fnv1a64(payload.data(), payload.size()));
  return out;
}

Model model_from_checkpoint_bytes(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin) {
  if (bytes.size() < 28) throw LengthError(origin + ": too short for a checkpoint header");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError(origin + ": not a checkpoint (bad magic)");
  }
  Reader header(bytes.data() + 8, bytes.size() - 8, origin);
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(origin + ": format version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  }
  const std::uint64_t payload_len = header.u64();
  if (bytes.size() != 20 + payload_len + 8) {
    throw LengthError(origin + ": file has " + std::to_string(bytes.size()) +
                      " bytes, header declares " + std::to_string(20 + payload_len + 8));
  }
  const std::uint8_t* payload = bytes.data() + 20;
  const std::uint64_t want = detail::fnv1a64(payload, payload_len);
  Reader tail(payload + payload_len, 8, origin);
  if (tail.u64() != want) {
    throw ChecksumError(origin + ": payload checksum mismatch");
  }

  Reader r(payload, payload_len, origin);
  ModelConfig cfg;
  std::vector<std::string> class_names;
  std::string dataset_kind;
  model_config_from_json(r.str(), cfg, class_names, dataset_kind);
  const std::uint64_t seed = r.u64();
  const std::uint32_t epochs = r.u32();

  Model model(cfg, seed);
  model.class_names() = class_names;
  model.dataset_kind() = dataset_kind;
  model.epochs_trained() = epochs;

  const std::uint32_t n_tensors = r.u32();
  const auto params = model.parameters();
  if (n_tensors != params.size() + 2) {
    throw FormatError(origin + ": " + std::to_string(n_tensors) + " tensors, architecture needs " +
                      std::to_string(params.size() + 2));
  }
  auto read_tensor = [&r, &origin](const std::string& want_name, std::vector<double>& into,
                                   const std::vector<std::size_t>* want_shape) {
    const std::string name = r.str();
    if (name != want_name) {
      throw FormatError(origin + ": tensor '" + name + "' where '" + want_name + "' expected");
    }
    const std::uint32_t ndim = r.u32();
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<std::size_t>(r.u64());
      total *= shape[d];
    }
    if (want_shape && shape != *want_shape) {
      throw FormatError(origin + ": tensor '" + name + "' has shape " + shape_to_string(shape) +
                        ", architecture needs " + shape_to_string(*want_shape));
    }
    into.resize(total);
    for (double& v : into) v = r.f64();
  };

  for (Parameter* p : params) {
    read_tensor(p->name, p->value.values(), &p->value.shape());
  }
  read_tensor("scaler/min", model.scaler().mins, nullptr);
  read_tensor("scaler/max", model.scaler().maxs, nullptr);
  if (!r.done()) throw FormatError(origin + ": trailing bytes after the last tensor");

  model.base_forest().refresh_leaf_distributions();
  for (BoostModule& m : model.modules()) m.forest.refresh_leaf_distributions();
  return model;
}

void save_checkpoint(Model& model, const std::string& path) {
  detail::atomic_write(path, checkpoint_bytes(model));
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return model_from_checkpoint_bytes(bytes, path);
}

namespace detail {

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

void atomic_write(const std::string& path, const std::vector<std::uint8_t>& bytes,
                  bool fail_before_rename) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  if (fail_before_rename) {
    throw IoError("injected failure before renaming " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace detail

}  // namespace grcan
