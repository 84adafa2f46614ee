#pragma once

// Comma-separated tables with a header row, LF line endings and numbers at
// 17 significant digits so every double reads back bit-identical.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phasebal {

/// "%.17g" without locale dependence.
std::string format_number(double x);

inline std::string cell(double x) { return format_number(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "1" : "0"; }
inline std::string cell(std::string_view s) { return std::string(s); }
inline std::string cell(const char* s) { return s; }

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

    /// Throws InvalidArgument when the width does not match the header or a
    /// cell holds a comma or line break.
    void add_row(std::vector<std::string> cells);

    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes `text` to `path` through a sibling temporary and a rename, so
/// readers never observe a half-written file. Throws Io.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    write_file_atomic(path, table.str());
}

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Unquoted comma-separated text; CR before LF and a final line without LF
/// are tolerated, blank lines skipped. Throws SchemaMismatch on ragged rows.
ParsedCsv parse_csv(std::string_view text, const std::string& origin = "<csv>");
/// Throws Io when the file cannot be read.
ParsedCsv read_csv(const std::filesystem::path& path);

}  // namespace phasebal
