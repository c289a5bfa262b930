#pragma once

#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqua/error.hpp"

// Line-delimited JSON files with a one-object header line. ordered_json keeps
// emission order stable so reruns are byte-identical.

namespace aqua::jsonl {

using json = nlohmann::ordered_json;

inline json parse_line(const std::string& line, const std::string& context) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) raise(ErrorCategory::parse, "malformed json line in " + context);
    return j;
}

// Reads a header+records file; validates the header's format tag and version.
struct Document {
    json header;
    std::vector<json> records;
};

inline Document read_file(const std::string& path, const std::string& expected_format,
                          int expected_version) {
    std::ifstream in(path);
    require(in.good(), ErrorCategory::io, "cannot open file: " + path);
    Document doc;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        if (!have_header) {
            require(j.value("format", "") == expected_format, ErrorCategory::parse,
                    path + ": expected format '" + expected_format + "'");
            require(j.value("version", -1) == expected_version, ErrorCategory::parse,
                    path + ": unsupported version");
            doc.header = std::move(j);
            have_header = true;
        } else {
            doc.records.push_back(std::move(j));
        }
    }
    require(have_header, ErrorCategory::parse, path + ": missing header line");
    return doc;
}

// Runs a decode step over parsed json, converting shape errors (missing
// keys, wrong types) into parse errors naming the offending file.
template <class Fn>
inline auto decode(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        raise(ErrorCategory::parse, path + ": " + e.what());
    }
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::trunc), path_(path) {
        require(out_.good(), ErrorCategory::io, "cannot write file: " + path);
    }

    void write(const json& j) {
        out_ << j.dump() << '\n';
        require(out_.good(), ErrorCategory::io, "write failed: " + path_);
    }

    void close() { out_.close(); }

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace aqua::jsonl

namespace aqua {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    require(out.good(), ErrorCategory::io, "cannot write file: " + path);
    out << text;
    require(out.good(), ErrorCategory::io, "write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

}  // namespace aqua
