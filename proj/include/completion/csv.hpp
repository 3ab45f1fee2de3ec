// csv.hpp — minimal comma-separated I/O. All on-disk formats are plain
// UTF-8 CSV with LF line endings and no quoting; field values therefore
// must not contain commas or newlines, which load-time validation enforces
// for identifiers.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace completion::csv {

// Splits one line on ','. Empty fields are preserved.
std::vector<std::string_view> split(std::string_view line);

// Reads a whole file into lines, dropping a trailing empty line. CR
// characters are rejected: the formats are LF-only.
std::vector<std::string> read_lines(const std::string& path);

// Writes lines joined with '\n' plus a final newline, creating parent
// directories as needed.
void write_file(const std::string& path, const std::string& content);

// Numeric matrix file: rows of comma-separated doubles, no header.
Eigen::MatrixXd read_matrix(const std::string& path);
std::string matrix_to_csv(const Eigen::MatrixXd& m);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace completion::csv
