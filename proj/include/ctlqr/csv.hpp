#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ctlqr::csv {

/// Fixed "%.12g" rendering so emitted files are byte-deterministic.
std::string num(double v);

inline constexpr const char* kMatrixHeader = "matrix,row,col,value\n";

/// Appends one `name,row,col,value` line per entry of m.
void append_matrix_rows(std::string& out, const char* name, const Eigen::MatrixXd& m);

void write_file(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace ctlqr::csv
