#pragma once

#include <filesystem>
#include <string>

#include "conex/matrix.hpp"

namespace conex {

// MatrixFile: one UTF-8 JSON header line
//   {"name":..,"rows":..,"cols":..,"dtype":"f32","byte_order":"LE"}\n
// followed by rows*cols little-endian f32 values, row-major.
void write_matrix(const DenseMatrix& m, const std::filesystem::path& path,
                  const std::string& name = "");

DenseMatrix read_matrix(const std::filesystem::path& path);

// Name stored in the header of an existing file.
std::string read_matrix_name(const std::filesystem::path& path);

}  // namespace conex
