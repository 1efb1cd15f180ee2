#ifndef DBHDIST_CSV_HPP
#define DBHDIST_CSV_HPP

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dbhdist {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
/// Fixed-point text with `decimals` digits.
std::string format_fixed(double v, int decimals);

/// Parses a full-string double; throws ValidationError naming `context`.
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

/// RFC 4180 style writer: fields with commas, quotes or newlines are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string> fields) { row(std::vector<std::string>(fields)); }

 private:
  std::ostream& os_;
};

/// Whole-file CSV reader with a header line.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(std::string_view text, const std::string& source);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  /// Throws ValidationError if the column is missing.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  /// "<source> line <n>" for data row i.
  std::string where(std::size_t row) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

/// Reads a file into a string; throws ValidationError if unreadable.
std::string read_file(const std::filesystem::path& path);
/// Writes a string to a file, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace dbhdist

#endif  // DBHDIST_CSV_HPP
