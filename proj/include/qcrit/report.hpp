#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qcrit {

inline constexpr const char* kReportSchema = "qcrit-report v1";

/// Insertion-ordered JSON emitter.  Every double is rendered in scientific
/// notation with 17 significant digits, so equal runs produce byte-equal
/// reports and values round-trip exactly.
class JsonWriter {
public:
    JsonWriter& obj_open();
    JsonWriter& obj_close();
    JsonWriter& arr_open();
    JsonWriter& arr_close();
    JsonWriter& key(const std::string& k);
    JsonWriter& str(const std::string& v);
    JsonWriter& num(double v);
    JsonWriter& integer(long long v);
    JsonWriter& u64(std::uint64_t v);
    JsonWriter& boolean(bool v);
    std::string take();

private:
    void before_value();
    void newline_indent();

    std::string out_;
    std::vector<char> stack_;        // 'o' object, 'a' array
    std::vector<bool> has_items_;
    bool pending_key_ = false;
};

std::string json_escape(const std::string& s);

void write_text_file(const std::string& path, const std::string& content);

/// Numeric CSV with a header row; all values in 17-digit scientific form.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace qcrit
