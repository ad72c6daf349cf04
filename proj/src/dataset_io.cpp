#include "iontrap/dataset_io.hpp"

#include "iontrap/config.hpp"
#include "iontrap/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace iontrap {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? std::string() : item.substr(first, last - first + 1));
    }
    return out;
}

template <class T>
bool parse_field(const std::string& text, T& value) {
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

SurvivalDataset parse_dataset(std::string_view text, std::string label) {
    SurvivalDataset ds;
    ds.label = std::move(label);
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        if (!header_seen) {
            auto fields = split_fields(line);
            std::string joined;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                joined += (i ? "," : "") + fields[i];
            }
            if (joined != kDatasetHeader) {
                throw InputError("dataset '" + ds.label + "' line " + std::to_string(line_no) + ": expected header " +
                                 std::string(kDatasetHeader));
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        SurvivalRow row;
        const bool ok = fields.size() == 4 && parse_field(fields[0], row.t_dipole) &&
                        parse_field(fields[1], row.p_trap) && parse_field(fields[2], row.n_success) &&
                        parse_field(fields[3], row.n_total) && std::isfinite(row.t_dipole) &&
                        std::isfinite(row.p_trap) && row.t_dipole >= 0.0 && row.p_trap >= 0.0 && row.n_total >= 0 &&
                        row.n_success >= 0 && row.n_success <= row.n_total;
        if (!ok) {
            throw InputError("dataset '" + ds.label + "' line " + std::to_string(line_no) + ": malformed row");
        }
        ds.rows.push_back(row);
    }
    if (ds.rows.empty()) {
        throw InputError("dataset '" + ds.label + "' contains no data rows");
    }
    return ds;
}

SurvivalDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read dataset " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), path.stem().string());
}

std::string format_dataset(const SurvivalDataset& dataset) {
    std::string out(kDatasetHeader);
    out += '\n';
    for (const auto& r : dataset.rows) {
        out += format_double(r.t_dipole) + ',' + format_double(r.p_trap) + ',' + std::to_string(r.n_success) + ',' +
               std::to_string(r.n_total) + '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << contents;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace iontrap
