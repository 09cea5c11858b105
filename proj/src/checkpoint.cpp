#include "adcofe/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

constexpr std::size_t kHeaderBlock = 4096;

void write_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t read_u64_le(std::istream& in, const std::string& path) {
  char bytes[8];
  if (!in.read(bytes, 8)) throw DataError(path + ": truncated checkpoint header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return v;
}

void write_double_le(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64_le(out, bits);
}

double read_double_le(std::istream& in, const std::string& path) {
  const std::uint64_t bits = read_u64_le(in, path);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void Checkpoint::set_config(const std::string& config_json) {
  json parsed;
  try {
    parsed = json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!parsed.is_object()) throw UsageError("checkpoint config must be a JSON object");
  config_json_ = parsed.dump();
}

void Checkpoint::add(const std::string& name, const Eigen::MatrixXd& tensor) {
  if (name.empty()) throw UsageError("checkpoint tensor needs a name");
  if (find(name) != nullptr) throw UsageError("duplicate checkpoint tensor: " + name);
  tensors_.emplace_back(name, tensor);
}

const Eigen::MatrixXd* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors_)
    if (n == name) return &t;
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  json header;
  header["config"] = json::parse(config_json_);
  json list = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors_) {
    list.push_back({{"cols", t.cols()}, {"name", name}, {"offset", offset}, {"rows", t.rows()}});
    offset += static_cast<std::uint64_t>(t.size()) * 8;
  }
  header["tensors"] = list;
  std::string text = header.dump();
  const std::size_t with_len = text.size() + 8;
  const std::size_t padded = ((with_len + kHeaderBlock - 1) / kHeaderBlock) * kHeaderBlock;
  text.append(padded - with_len, ' ');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  write_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : tensors_) {
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) write_double_le(out, t(r, c));
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  const std::uint64_t header_len = read_u64_le(in, path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw DataError(path + ": truncated checkpoint header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": invalid checkpoint header: " + e.what());
  }
  if (!header.is_object() || !header.contains("config") || !header.contains("tensors"))
    throw DataError(path + ": checkpoint header missing config or tensors");

  Checkpoint ckpt;
  ckpt.config_json_ = header.at("config").dump();
  std::uint64_t expect_offset = 0;
  for (const json& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    if (rows < 0 || cols < 0 || offset != expect_offset)
      throw DataError(path + ": inconsistent tensor layout for " + name);
    expect_offset += static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) * 8;
    Eigen::MatrixXd t(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = read_double_le(in, path);
    ckpt.tensors_.emplace_back(name, std::move(t));
  }
  return ckpt;
}

}  // namespace adcofe
