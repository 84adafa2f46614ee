#include "phasebal/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "phasebal/error.hpp"

namespace phasebal {

std::string format_number(double x) {
    if (x == 0.0) return "0";  // folds -0
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
        throw Error(ErrorCode::InvalidArgument, "row has " + std::to_string(cells.size()) + " cells, header has " +
                                                    std::to_string(header_.size()));
    }
    for (const std::string& c : cells) {
        if (c.find_first_of(",\r\n") != std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, "cell '" + c + "' needs quoting, which is not supported", c);
        }
    }
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create '" + path.parent_path().string() + "': " + ec.message(),
                            path.string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing", path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            throw Error(ErrorCode::Io, "short write to '" + tmp.string() + "'", path.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw Error(ErrorCode::Io, "cannot move '" + tmp.string() + "' into place: " + ec.message(), path.string());
    }
}

ParsedCsv parse_csv(std::string_view text, const std::string& origin) {
    ParsedCsv out;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
            while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
            cells.emplace_back(field);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!have_header) {
            out.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != out.header.size()) {
                throw Error(ErrorCode::SchemaMismatch,
                            origin + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                " fields, header has " + std::to_string(out.header.size()),
                            "line " + std::to_string(line_no));
            }
            out.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw Error(ErrorCode::SchemaMismatch, origin + ": no header row", origin);
    return out;
}

ParsedCsv read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

}  // namespace phasebal
