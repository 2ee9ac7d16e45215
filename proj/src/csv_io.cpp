#include "cuped/csv_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cuped {
namespace {

constexpr std::string_view kFixedHeader[] = {"unit_id", "arm", "y_pre", "y_post"};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(std::string_view field, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw CsvError("column '" + std::string(column) + "': '" + std::string(field) + "' is not a finite number",
                   line);
  }
  return v;
}

}  // namespace

ExperimentFrame read_frame_csv(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;

  auto next_line = [&](std::string& out) -> bool {
    if (!std::getline(in, out)) return false;
    ++line_no;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  };

  if (!next_line(text) || text.empty()) throw CsvError("missing header", 1);
  if (line_no == 1 && text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  const auto header = split(text);
  if (header.size() < 4) throw CsvError("header must start with unit_id,arm,y_pre,y_post", 1);
  for (std::size_t j = 0; j < 4; ++j) {
    if (header[j] != kFixedHeader[j]) {
      throw CsvError("header column " + std::to_string(j + 1) + " must be '" + std::string(kFixedHeader[j]) +
                         "', found '" + std::string(header[j]) + "'",
                     1);
    }
  }
  ExperimentFrame frame;
  std::unordered_set<std::string> seen_names{"unit_id", "arm", "y_pre", "y_post"};
  for (std::size_t j = 4; j < header.size(); ++j) {
    std::string name(header[j]);
    if (name.empty()) throw CsvError("empty covariate name in header", 1);
    if (!seen_names.insert(name).second) throw CsvError("duplicate column '" + name + "'", 1);
    frame.covariate_names.push_back(std::move(name));
  }
  const std::size_t width = header.size();
  const std::size_t p = width - 4;

  std::vector<double> pre, post, cov;
  std::unordered_set<std::string> ids;
  bool saw_blank = false;
  while (next_line(text)) {
    if (text.empty()) {
      saw_blank = true;
      continue;
    }
    if (saw_blank) throw CsvError("blank line inside data", line_no - 1);
    const auto fields = split(text);
    if (fields.size() != width) {
      throw CsvError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()),
                     line_no);
    }
    std::string id(fields[0]);
    if (id.empty()) throw CsvError("empty unit_id", line_no);
    if (!ids.insert(id).second) throw CsvError("duplicate unit_id '" + id + "'", line_no);
    if (fields[1] == "1") {
      frame.arms.push_back(Arm::kTreatment);
    } else if (fields[1] == "0") {
      frame.arms.push_back(Arm::kControl);
    } else {
      throw CsvError("arm must be 0 or 1, found '" + std::string(fields[1]) + "'", line_no);
    }
    frame.unit_ids.push_back(std::move(id));
    pre.push_back(parse_number(fields[2], line_no, "y_pre"));
    post.push_back(parse_number(fields[3], line_no, "y_post"));
    for (std::size_t j = 0; j < p; ++j) cov.push_back(parse_number(fields[4 + j], line_no, header[4 + j]));
  }
  if (frame.unit_ids.empty()) throw CsvError("no data rows", line_no + 1);

  const auto n = static_cast<Eigen::Index>(pre.size());
  frame.y_pre = Eigen::Map<const Eigen::VectorXd>(pre.data(), n);
  frame.y_post = Eigen::Map<const Eigen::VectorXd>(post.data(), n);
  frame.covariates = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cov.data(), n, static_cast<Eigen::Index>(p));
  try {
    frame.validate();
  } catch (const InvalidFrame& e) {
    throw CsvError(e.what(), 0);
  }
  return frame;
}

ExperimentFrame read_frame_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open '" + path + "'", 0);
  return read_frame_csv(in);
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  return fmt::format("{}", v);
}

void write_frame_csv(std::ostream& out, const ExperimentFrame& frame) {
  out << "unit_id,arm,y_pre,y_post";
  for (const auto& name : frame.covariate_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    out << frame.unit_ids[row] << ',' << (frame.arms[row] == Arm::kTreatment ? '1' : '0') << ','
        << format_number(frame.y_pre(i)) << ',' << format_number(frame.y_post(i));
    for (Eigen::Index j = 0; j < frame.covariates.cols(); ++j) out << ',' << format_number(frame.covariates(i, j));
    out << '\n';
  }
}

}  // namespace cuped
