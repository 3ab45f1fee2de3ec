#include "completion/csv.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "completion/common.hpp"

namespace completion::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  if (content.find('\r') != std::string::npos)
    throw LoadError("CR character in " + path + "; expected LF line endings");

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t pos = content.find('\n', start);
    if (pos == std::string::npos) pos = content.size();
    lines.emplace_back(content.substr(start, pos - start));
    start = pos + 1;
  }
  return lines;
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw LoadError("empty matrix file: " + path);

  const auto first = split(lines[0]);
  const Eigen::Index cols = static_cast<Eigen::Index>(first.size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size()), cols);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split(lines[r]);
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw LoadError(path + ": row " + std::to_string(r + 1) + " has " +
                      std::to_string(fields.size()) + " columns, expected " +
                      std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), c) = parse_double(
          fields[static_cast<std::size_t>(c)],
          path + " row " + std::to_string(r + 1));
    }
  }
  return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
  return out;
}

}  // namespace completion::csv
