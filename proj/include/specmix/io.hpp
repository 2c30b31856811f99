#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specmix/errors.hpp"
#include "specmix/image.hpp"

namespace specmix {

static_assert(std::endian::native == std::endian::little,
              "raw container payloads are little-endian");

enum class ImageFormat { RawF64, CsvBandMajor };

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFileError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw UnreadableFileError("'" + path + "' is not valid JSON");
  return j;
}

template <class T>
std::vector<T> read_raw_payload(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFileError("cannot open payload '" + path + "'");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * sizeof(T))
    throw FileDimensionError("payload '" + path + "' holds " +
                             std::to_string(bytes) + " bytes, header implies " +
                             std::to_string(count * sizeof(T)));
  in.seekg(0);
  std::vector<T> out(count);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw UnreadableFileError("short read on payload '" + path + "'");
  return out;
}

template <class T>
void write_raw_payload(const std::string& path, const std::vector<T>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write payload '" + path + "'");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!out) throw IoError("short write on payload '" + path + "'");
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("short write on '" + path + "'");
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline std::string sibling_path(const std::string& header_path,
                                const std::string& payload) {
  return (std::filesystem::path(header_path).parent_path() / payload).string();
}

}  // namespace detail

// Container: a JSON header {id, rows, cols, bands, dtype:"f64",
// order:"row-major-band-fastest", payload:<relative raw file>} next to a raw
// little-endian payload. A CSV alternative exists for small fixtures.
inline ImageTensor load_image(const std::string& path, ImageFormat format) {
  ImageTensor img;
  if (format == ImageFormat::RawF64) {
    const nlohmann::json h = detail::parse_json_file(path);
    try {
      img.id = h.at("id").get<std::string>();
      img.rows = h.at("rows").get<int>();
      img.cols = h.at("cols").get<int>();
      img.bands = h.at("bands").get<int>();
      if (h.at("dtype").get<std::string>() != "f64")
        throw UnreadableFileError("'" + path + "': unsupported dtype");
    } catch (const nlohmann::json::exception& e) {
      throw UnreadableFileError("'" + path + "': bad header: " + e.what());
    }
    require(img.rows > 0 && img.cols > 0 && img.bands > 0,
            "'" + path + "': dimensions must be positive");
    const std::string payload =
        detail::sibling_path(path, h.at("payload").get<std::string>());
    img.values = detail::read_raw_payload<double>(
        payload, static_cast<std::size_t>(img.rows) * img.cols * img.bands);
  } else {
    // First line: id,rows,cols,bands. Then one line per band holding
    // rows*cols comma-separated values scanned row-major.
    std::istringstream in(detail::read_text_file(path));
    std::string line;
    if (!std::getline(in, line))
      throw UnreadableFileError("'" + path + "': empty CSV");
    {
      std::istringstream head(line);
      std::string tok;
      if (!std::getline(head, img.id, ',')) throw UnreadableFileError(path);
      try {
        std::getline(head, tok, ',');
        img.rows = std::stoi(tok);
        std::getline(head, tok, ',');
        img.cols = std::stoi(tok);
        std::getline(head, tok, ',');
        img.bands = std::stoi(tok);
      } catch (const std::exception&) {
        throw UnreadableFileError("'" + path + "': bad CSV header line");
      }
    }
    require(img.rows > 0 && img.cols > 0 && img.bands > 0,
            "'" + path + "': dimensions must be positive");
    const std::size_t per_band = static_cast<std::size_t>(img.rows) * img.cols;
    img.values.assign(per_band * img.bands, 0.0);
    std::size_t n_read = 0;
    for (int b = 0; b < img.bands; ++b) {
      if (!std::getline(in, line))
        throw FileDimensionError("'" + path + "': expected " +
                                 std::to_string(img.bands) + " band lines");
      std::istringstream row(line);
      std::string tok;
      std::size_t px = 0;
      while (std::getline(row, tok, ',')) {
        if (tok.empty()) continue;
        if (px >= per_band)
          throw FileDimensionError("'" + path + "': too many values in band " +
                                   std::to_string(b));
        try {
          img.values[px * img.bands + b] = std::stod(tok);
        } catch (const std::exception&) {
          throw UnreadableFileError("'" + path + "': bad number '" + tok + "'");
        }
        ++px;
        ++n_read;
      }
      if (px != per_band)
        throw FileDimensionError("'" + path + "': band " + std::to_string(b) +
                                 " has " + std::to_string(px) + " values, expected " +
                                 std::to_string(per_band));
    }
    (void)n_read;
  }
  img.validate();
  return img;
}

// Writes <stem>.json + <stem>.raw.
inline void save_image(const ImageTensor& img, const std::string& header_path) {
  img.validate();
  const std::filesystem::path hp(header_path);
  const std::string payload_name = hp.stem().string() + ".raw";
  nlohmann::json h{{"id", img.id},     {"rows", img.rows},
                   {"cols", img.cols}, {"bands", img.bands},
                   {"dtype", "f64"},   {"order", "row-major-band-fastest"},
                   {"payload", payload_name}};
  detail::write_json_file(header_path, h);
  detail::write_raw_payload(detail::sibling_path(header_path, payload_name),
                            img.values);
}

// Rasters share the container layout with a u16 or f32 payload.
template <class T>
struct Raster {
  std::string id;
  int rows = 0;
  int cols = 0;
  std::vector<T> values;  // row-major
};

template <class T>
inline const char* raster_dtype();
template <>
inline const char* raster_dtype<std::uint16_t>() {
  return "u16";
}
template <>
inline const char* raster_dtype<float>() {
  return "f32";
}

template <class T>
void save_raster(const Raster<T>& raster, const std::string& header_path) {
  require(raster.values.size() ==
              static_cast<std::size_t>(raster.rows) * raster.cols,
          "raster '" + raster.id + "': size mismatch");
  const std::filesystem::path hp(header_path);
  const std::string payload_name = hp.stem().string() + ".raw";
  nlohmann::json h{{"id", raster.id},
                   {"rows", raster.rows},
                   {"cols", raster.cols},
                   {"dtype", raster_dtype<T>()},
                   {"payload", payload_name}};
  detail::write_json_file(header_path, h);
  detail::write_raw_payload(detail::sibling_path(header_path, payload_name),
                            raster.values);
}

template <class T>
Raster<T> load_raster(const std::string& header_path) {
  const nlohmann::json h = detail::parse_json_file(header_path);
  Raster<T> raster;
  raster.id = h.at("id").get<std::string>();
  raster.rows = h.at("rows").get<int>();
  raster.cols = h.at("cols").get<int>();
  if (h.at("dtype").get<std::string>() != raster_dtype<T>())
    throw UnreadableFileError("'" + header_path + "': dtype mismatch");
  raster.values = detail::read_raw_payload<T>(
      detail::sibling_path(header_path, h.at("payload").get<std::string>()),
      static_cast<std::size_t>(raster.rows) * raster.cols);
  return raster;
}

// Flat per-pixel labels in table order, 1-based.
inline void save_labels(const std::string& path, const std::vector<int>& labels) {
  detail::write_json_file(path,
                          nlohmann::json{{"n", labels.size()}, {"labels", labels}});
}

inline std::vector<int> load_labels(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  auto labels = j.at("labels").get<std::vector<int>>();
  if (labels.size() != j.at("n").get<std::size_t>())
    throw FileDimensionError("'" + path + "': label count mismatch");
  return labels;
}

}  // namespace specmix
