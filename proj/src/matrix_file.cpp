#include "conex/matrix_file.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "conex/errors.hpp"

namespace conex {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

struct Header {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

Header parse_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": header is not JSON: " + e.what());
  }
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(key)) throw FormatError(path.string() + ": header missing field '" + key + "'");
    return j.at(key);
  };
  Header h;
  if (!field("rows").is_number_unsigned()) throw FormatError(path.string() + ": header field 'rows' must be a non-negative integer");
  if (!field("cols").is_number_unsigned()) throw FormatError(path.string() + ": header field 'cols' must be a non-negative integer");
  h.rows = field("rows").get<std::size_t>();
  h.cols = field("cols").get<std::size_t>();
  if (field("dtype") != "f32") throw FormatError(path.string() + ": header field 'dtype' must be \"f32\"");
  if (field("byte_order") != "LE") throw FormatError(path.string() + ": header field 'byte_order' must be \"LE\"");
  if (j.contains("name") && j["name"].is_string()) h.name = j["name"].get<std::string>();
  return h;
}

}  // namespace

void write_matrix(const DenseMatrix& m, const std::filesystem::path& path, const std::string& name) {
  require(m.all_finite(), "write_matrix: matrix has non-finite entries");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  nlohmann::ordered_json h;
  h["name"] = name.empty() ? path.stem().string() : name;
  h["rows"] = m.rows();
  h["cols"] = m.cols();
  h["dtype"] = "f32";
  h["byte_order"] = "LE";
  out << h.dump() << '\n';
  std::vector<std::uint32_t> payload(m.size());
  auto src = m.data();
  for (std::size_t i = 0; i < payload.size(); ++i)
    payload[i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(src[i])));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(std::uint32_t)));
  if (!out) throw DataError("write failed: " + path.string());
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix file: " + path.string());
  const Header h = parse_header(in, path);
  const std::size_t count = h.rows * h.cols;
  std::vector<std::uint32_t> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint32_t))
    throw FormatError(path.string() + ": truncated payload, expected " + std::to_string(count * 4) +
                      " bytes for rows*cols, got " + std::to_string(in.gcount()));
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(path.string() + ": trailing bytes after payload");
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i)
    data[i] = static_cast<double>(std::bit_cast<float>(to_le(payload[i])));
  return DenseMatrix(h.rows, h.cols, std::move(data));
}

std::string read_matrix_name(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix file: " + path.string());
  return parse_header(in, path).name;
}

}  // namespace conex
