#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fsig {

using Bytes = std::vector<unsigned char>;

std::array<unsigned char, 32> sha256(std::span<const unsigned char> data);

std::string base64_encode(std::span<const unsigned char> data);
Bytes base64_decode(std::string_view text);  // FormatError on bad input

// 32-bit little-endian float packing used for sketch vectors (4n bytes).
void put_f32_le(Bytes& out, float v);
float get_f32_le(std::span<const unsigned char> in, std::size_t offset);

Bytes read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const unsigned char> data);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

// Shortest decimal form that round-trips through float (CSV feature values
// are stored at 32-bit precision).
std::string format_f32(float v);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace fsig
