#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "shpol/errors.hpp"

namespace shpol::csv {

// Shortest round-trippable text for a double; stable across runs.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Writer {
public:
    Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
        : path_(path), out_(path) {
        if (!out_) {
            throw IoError("cannot open " + path.string() + " for writing");
        }
        bool first = true;
        for (auto h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ',';
            out_ << fmt(v);
            first = false;
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) {
            throw IoError("write failed: " + path_.string());
        }
    }

    ~Writer() {
        if (out_.is_open()) out_.close();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

// Header row plus numeric rows.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    Table t;
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("empty CSV: " + path.string());
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> r;
        while (std::getline(ss, cell, ',')) {
            try {
                r.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("malformed CSV cell '" + cell + "' in " + path.string());
            }
        }
        if (r.size() != t.header.size()) {
            throw IoError("ragged CSV row in " + path.string());
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace shpol::csv
