#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"

namespace quadom {

// A value cell: numeric cells are emitted as %.16e (17 significant digits),
// text cells verbatim. No timestamps anywhere; files are byte-reproducible.
using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline std::string format_cell(const Cell& c) {
    if (std::holds_alternative<double>(c)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.16e", std::get<double>(c));
        return buf;
    }
    return std::get<std::string>(c);
}

// Header carries the resolved config echo and its hash as '#' comment lines,
// then one '#' line of column names; data rows are comma-separated.
inline std::string table_to_csv(const Table& t, const RunConfig& cfg) {
    std::string out;
    std::istringstream echo(echo_config(cfg));
    for (std::string line; std::getline(echo, line);) out += "# " + line + '\n';
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(config_hash(cfg)));
        out += std::string("# config_hash = ") + buf + '\n';
    }
    // double-hash so re-ingesting the header region skips this line as a comment
    out += "## ";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::string cell = format_cell(row[i]);
            // text cells may carry the separator (operator labels, error
            // strings); keep the row structurally sound
            for (char& ch : cell) {
                if (ch == ',') ch = ';';
                if (ch == '\n') ch = ' ';
            }
            out += cell;
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json table_to_json(const Table& t, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    j["config_hash"] = buf;
    j["config"] = echo_config(cfg);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
            if (std::holds_alternative<double>(row[i]))
                obj[t.columns[i]] = std::get<double>(row[i]);
            else
                obj[t.columns[i]] = std::get<std::string>(row[i]);
        }
        rows.push_back(std::move(obj));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open output file: " + path);
    out << content;
    if (!out) throw error("write failed: " + path);
}

// Write `table` as <stem>.csv or <stem>.json under dir per the config format;
// returns the path written.
inline std::string emit_table(const Table& t, const RunConfig& cfg,
                              const std::string& dir, const std::string& stem) {
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);  // failure surfaces at open below
    }
    const std::string base = dir.empty() ? stem : dir + "/" + stem;
    if (cfg.out_format == "json") {
        const std::string path = base + ".json";
        write_file(path, table_to_json(t, cfg).dump(2) + "\n");
        return path;
    }
    const std::string path = base + ".csv";
    write_file(path, table_to_csv(t, cfg));
    return path;
}

} // namespace quadom
