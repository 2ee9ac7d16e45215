#pragma once

#include <iosfwd>
#include <string>

#include "cuped/errors.hpp"
#include "cuped/frame.hpp"

namespace cuped {

/// Malformed experiment CSV. line() is 1-based; 0 when the problem is not tied to a line.
class CsvError : public Error {
 public:
  CsvError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Reads `unit_id,arm,y_pre,y_post[,<covariate>...]` with arm in {0, 1}
/// (1 = treatment) and `.` as the decimal separator.
ExperimentFrame read_frame_csv(std::istream& in);
ExperimentFrame read_frame_csv_file(const std::string& path);

/// Writes the same format; numbers use the shortest representation that
/// round-trips exactly.
void write_frame_csv(std::ostream& out, const ExperimentFrame& frame);

/// Shortest round-trip text for a double; empty for NaN.
std::string format_number(double v);

}  // namespace cuped
