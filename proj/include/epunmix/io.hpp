#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epunmix/types.hpp"

namespace epunmix {

enum class CubeDtype { f32, f64 };

inline std::string dtype_name(CubeDtype d) { return d == CubeDtype::f32 ? "f32" : "f64"; }

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "cube payloads are little-endian; big-endian hosts are unsupported");

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeader(path + ": " + e.what());
  }
  return j;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

template <typename Raw, typename Scalar>
MatrixX<Scalar> read_payload(std::ifstream& in, Index bands, Index pixels) {
  std::vector<Raw> buffer(static_cast<std::size_t>(bands * pixels));
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size() * sizeof(Raw)));
  MatrixX<Scalar> data(bands, pixels);
  for (Index b = 0; b < bands; ++b)
    for (Index n = 0; n < pixels; ++n)
      data(b, n) = static_cast<Scalar>(buffer[static_cast<std::size_t>(b * pixels + n)]);
  return data;
}

template <typename Raw, typename Scalar>
void write_payload(std::ofstream& out, const MatrixX<Scalar>& data) {
  const Index bands = data.rows();
  const Index pixels = data.cols();
  std::vector<Raw> buffer(static_cast<std::size_t>(bands * pixels));
  for (Index b = 0; b < bands; ++b)
    for (Index n = 0; n < pixels; ++n)
      buffer[static_cast<std::size_t>(b * pixels + n)] = static_cast<Raw>(data(b, n));
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(Raw)));
}

}  // namespace detail

/// Writes a cube as a raw band-sequential, row-major, little-endian payload
/// at `path` with a JSON sidecar header at `path + ".json"`.
template <typename Scalar>
void write_cube(const HyperImage<Scalar>& image, const std::string& path,
                CubeDtype dtype = CubeDtype::f64) {
  image.validate();
  nlohmann::json header = {
      {"width", image.width},
      {"height", image.height},
      {"bands", image.bands()},
      {"dtype", dtype_name(dtype)},
      {"layout", "band-sequential"},
      {"order", "row-major"},
      {"byte_order", "little-endian"},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  if (dtype == CubeDtype::f32)
    detail::write_payload<float>(out, image.data);
  else
    detail::write_payload<double>(out, image.data);
  if (!out) throw IoError("short write to " + path);
  detail::save_json(header, path + ".json");
}

template <typename Scalar>
HyperImage<Scalar> read_cube(const std::string& path) {
  const nlohmann::json header = detail::load_json(path + ".json");
  for (const char* field : {"width", "height", "bands", "dtype", "layout", "order", "byte_order"})
    if (!header.contains(field))
      throw MalformedHeader(path + ": header is missing \"" + field + "\"");
  if (!header["width"].is_number_integer() || !header["height"].is_number_integer() ||
      !header["bands"].is_number_integer())
    throw MalformedHeader(path + ": dimensions must be integers");
  const Index width = header["width"].get<Index>();
  const Index height = header["height"].get<Index>();
  const Index bands = header["bands"].get<Index>();
  if (width < 1 || height < 1 || bands < 1)
    throw MalformedHeader(path + ": dimensions must be positive");
  if (header["layout"] != "band-sequential" || header["order"] != "row-major" ||
      header["byte_order"] != "little-endian")
    throw MalformedHeader(path + ": unsupported layout fields");
  const std::string dtype = header["dtype"].get<std::string>();
  std::size_t value_size;
  if (dtype == "f32")
    value_size = sizeof(float);
  else if (dtype == "f64")
    value_size = sizeof(double);
  else
    throw UnknownDtype(path + ": unknown dtype \"" + dtype + "\"");

  const auto expected = static_cast<std::uintmax_t>(width) * static_cast<std::uintmax_t>(height) *
                        static_cast<std::uintmax_t>(bands) * value_size;
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path);
  if (actual != expected)
    throw SizeMismatch(path + ": payload has " + std::to_string(actual) + " bytes, expected " +
                       std::to_string(expected));

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  HyperImage<Scalar> image;
  image.width = width;
  image.height = height;
  if (dtype == "f32")
    image.data = detail::read_payload<float, Scalar>(in, bands, width * height);
  else
    image.data = detail::read_payload<double, Scalar>(in, bands, width * height);
  if (!in) throw SizeMismatch(path + ": payload ended early");
  return image;
}

/// A per-endmember map stack (R x N matrix or expression) stored as a cube
/// with bands = R.
template <typename Derived>
void write_map_stack(const Eigen::MatrixBase<Derived>& maps, Index width, Index height,
                     const std::string& path, CubeDtype dtype = CubeDtype::f64) {
  HyperImage<typename Derived::Scalar> image;
  image.width = width;
  image.height = height;
  image.data = maps;
  write_cube(image, path, dtype);
}

template <typename Scalar>
MatrixX<Scalar> read_map_stack(const std::string& path, Index* width = nullptr,
                               Index* height = nullptr) {
  const auto image = read_cube<Scalar>(path);
  if (width) *width = image.width;
  if (height) *height = image.height;
  return image.data;
}

/// Reads an endmember library from CSV: one row per band, one column per
/// endmember, optional header row. Negative reflectances are reported as
/// warnings, not errors.
template <typename Scalar>
EndmemberMatrix<Scalar> read_library(const std::string& path,
                                     std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<Scalar>> rows;
  std::string line;
  long line_no = 0;
  bool negative_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<Scalar> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && *end == ' ') ++end;
      if (end == begin || (end && *end != '\0')) {
        numeric = false;
        break;
      }
      row.push_back(static_cast<Scalar>(v));
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header row
      throw IoError(path + ": non-numeric cell at line " + std::to_string(line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ": ragged row at line " + std::to_string(line_no));
    for (const Scalar v : row) negative_seen = negative_seen || v < Scalar(0);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": empty library");
  if (negative_seen && warnings)
    warnings->push_back(path + ": library contains negative reflectance values");
  EndmemberMatrix<Scalar> s(static_cast<Index>(rows.size()),
                            static_cast<Index>(rows.front().size()));
  for (Index l = 0; l < s.rows(); ++l)
    for (Index r = 0; r < s.cols(); ++r)
      s(l, r) = rows[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
  return s;
}

template <typename Scalar>
void write_library(const EndmemberMatrix<Scalar>& endmembers, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  for (Index l = 0; l < endmembers.rows(); ++l) {
    for (Index r = 0; r < endmembers.cols(); ++r) {
      if (r) out << ',';
      out << endmembers(l, r);
    }
    out << '\n';
  }
}

template <typename Scalar>
void write_noise_model(const NoiseModel<Scalar>& noise, Index bands, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "epunmix/1";
  switch (noise.kind()) {
    case NoiseKind::isotropic:
      j["kind"] = "isotropic";
      j["variance"] = noise.isotropic_variance();
      break;
    case NoiseKind::diagonal: {
      j["kind"] = "diagonal";
      const auto& v = noise.band_variances();
      j["variances"] = std::vector<double>(v.data(), v.data() + v.size());
      break;
    }
    case NoiseKind::full: {
      j["kind"] = "full";
      std::vector<std::vector<double>> cov(static_cast<std::size_t>(bands));
      for (Index i = 0; i < bands; ++i) {
        cov[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(bands));
        for (Index k = 0; k < bands; ++k)
          cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
              static_cast<double>(noise.covariance()(i, k));
      }
      j["covariance"] = cov;
      break;
    }
  }
  detail::save_json(j, path);
}

template <typename Scalar>
NoiseModel<Scalar> read_noise_model(const std::string& path) {
  const nlohmann::json j = detail::load_json(path);
  if (!j.contains("kind")) throw MalformedHeader(path + ": missing \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "isotropic") {
    if (!j.contains("variance")) throw MalformedHeader(path + ": missing \"variance\"");
    return NoiseModel<Scalar>::isotropic(static_cast<Scalar>(j["variance"].get<double>()));
  }
  if (kind == "diagonal") {
    if (!j.contains("variances")) throw MalformedHeader(path + ": missing \"variances\"");
    const auto values = j["variances"].get<std::vector<double>>();
    VectorX<Scalar> v(static_cast<Index>(values.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<Scalar>(values[static_cast<std::size_t>(i)]);
    return NoiseModel<Scalar>::diagonal(std::move(v));
  }
  if (kind == "full") {
    if (!j.contains("covariance")) throw MalformedHeader(path + ": missing \"covariance\"");
    const auto rows = j["covariance"].get<std::vector<std::vector<double>>>();
    const Index n = static_cast<Index>(rows.size());
    MatrixX<Scalar> cov(n, n);
    for (Index i = 0; i < n; ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw MalformedHeader(path + ": covariance is not square");
      for (Index k = 0; k < n; ++k)
        cov(i, k) = static_cast<Scalar>(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
    return NoiseModel<Scalar>::full(std::move(cov));
  }
  throw MalformedHeader(path + ": unknown noise kind \"" + kind + "\"");
}

}  // namespace epunmix
