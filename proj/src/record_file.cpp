#include "uica/record_file.hpp"

#include <fstream>
#include <sstream>

#include "uica/errors.hpp"

namespace uica {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_bool(const std::string& s, const std::string& context) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ParseError(context + ": expected boolean, got '" + s + "'");
}

bool Record::has(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return true;
    return false;
}

std::optional<std::string> Record::find(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return f.value;
    return std::nullopt;
}

const std::string& Record::get(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return f.value;
    fail("missing field '" + name + "'");
}

std::string Record::get_or(const std::string& name, const std::string& fallback) const {
    auto v = find(name);
    return v ? *v : fallback;
}

int Record::get_int(const std::string& name) const {
    const std::string& v = get(name);
    try {
        size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail("field '" + name + "': expected integer, got '" + v + "'");
    }
}

int Record::get_int_or(const std::string& name, int fallback) const {
    return has(name) ? get_int(name) : fallback;
}

bool Record::get_bool_or(const std::string& name, bool fallback) const {
    auto v = find(name);
    if (!v) return fallback;
    return parse_bool(*v, source + ": field '" + name + "'");
}

double Record::get_double(const std::string& name) const {
    const std::string& v = get(name);
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail("field '" + name + "': expected number, got '" + v + "'");
    }
}

void Record::fail(const std::string& msg) const {
    throw ParseError(source + ":" + std::to_string(first_line) + ": " + msg);
}

std::vector<Record> parse_records(std::istream& in, const std::string& source) {
    std::vector<Record> records;
    Record cur;
    cur.source = source;
    std::string line;
    int lineno = 0;
    auto flush = [&]() {
        if (!cur.fields.empty()) {
            records.push_back(cur);
            cur.fields.clear();
        }
    };
    while (std::getline(in, line)) {
        lineno++;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        size_t colon = t.find(':');
        if (colon == std::string::npos)
            throw ParseError(source + ":" + std::to_string(lineno) +
                             ": expected 'field: value', got '" + t + "'");
        Record::Field f;
        f.name = trim(t.substr(0, colon));
        f.value = trim(t.substr(colon + 1));
        f.line = lineno;
        if (f.name.empty())
            throw ParseError(source + ":" + std::to_string(lineno) + ": empty field name");
        if (cur.fields.empty()) cur.first_line = lineno;
        cur.fields.push_back(std::move(f));
    }
    flush();
    return records;
}

std::vector<Record> parse_records_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    return parse_records(in, path);
}

}  // namespace uica
