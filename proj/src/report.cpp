#include "qcrit/report.hpp"

#include <cstdio>
#include <fstream>

#include "qcrit/common.hpp"

namespace qcrit {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void JsonWriter::newline_indent() {
    out_ += '\n';
    out_.append(2 * stack_.size(), ' ');
}

void JsonWriter::before_value() {
    if (pending_key_) {
        pending_key_ = false;
        return;
    }
    if (stack_.empty()) return;
    if (has_items_.back()) out_ += ',';
    newline_indent();
    has_items_.back() = true;
}

JsonWriter& JsonWriter::obj_open() {
    before_value();
    out_ += '{';
    stack_.push_back('o');
    has_items_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::obj_close() {
    bool had = has_items_.back();
    stack_.pop_back();
    has_items_.pop_back();
    if (had) newline_indent();
    out_ += '}';
    return *this;
}

JsonWriter& JsonWriter::arr_open() {
    before_value();
    out_ += '[';
    stack_.push_back('a');
    has_items_.push_back(false);
    return *this;
}

JsonWriter& JsonWriter::arr_close() {
    bool had = has_items_.back();
    stack_.pop_back();
    has_items_.pop_back();
    if (had) newline_indent();
    out_ += ']';
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    if (has_items_.back()) out_ += ',';
    newline_indent();
    has_items_.back() = true;
    out_ += '"';
    out_ += json_escape(k);
    out_ += "\": ";
    pending_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::str(const std::string& v) {
    before_value();
    out_ += '"';
    out_ += json_escape(v);
    out_ += '"';
    return *this;
}

JsonWriter& JsonWriter::num(double v) {
    before_value();
    out_ += format_sci(v);
    return *this;
}

JsonWriter& JsonWriter::integer(long long v) {
    before_value();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::u64(std::uint64_t v) {
    before_value();
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::boolean(bool v) {
    before_value();
    out_ += v ? "true" : "false";
    return *this;
}

std::string JsonWriter::take() {
    out_ += '\n';
    return std::move(out_);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("output: cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw InvalidInput("output: failed writing '" + path + "'");
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string body;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) body += ',';
        body += header[j];
    }
    body += '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) body += ',';
            body += format_sci(row[j]);
        }
        body += '\n';
    }
    write_text_file(path, body);
}

}  // namespace qcrit
