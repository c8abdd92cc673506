#pragma once

#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace uica {

// Line-oriented record format shared by instruction tables, configs and
// benchmark suites: records are blank-line separated groups of
// "field: value" lines; '#' starts a comment.
struct Record {
    struct Field {
        std::string name;
        std::string value;
        int line = 0;
    };
    std::vector<Field> fields;
    int first_line = 0;
    std::string source;  // file name, for diagnostics

    bool has(const std::string& name) const;
    // First value for `name`; throws ParseError if absent.
    const std::string& get(const std::string& name) const;
    std::string get_or(const std::string& name, const std::string& fallback) const;
    std::optional<std::string> find(const std::string& name) const;

    int get_int(const std::string& name) const;
    int get_int_or(const std::string& name, int fallback) const;
    bool get_bool_or(const std::string& name, bool fallback) const;
    double get_double(const std::string& name) const;

    [[noreturn]] void fail(const std::string& msg) const;
};

std::vector<Record> parse_records(std::istream& in, const std::string& source);
std::vector<Record> parse_records_file(const std::string& path);

// Helpers shared by the record-based loaders.
std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
bool parse_bool(const std::string& s, const std::string& context);

}  // namespace uica
