#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qsa {

// Ordered key-value report. Field names are stable; kv output is the diffable
// golden format, text output adds alignment for reading.
class AnalysisReport {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, bool value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, std::uint64_t value);
    void set(const std::string& key, double value);  // 12 significant digits

    void flag_inconsistent(const std::string& why);
    bool inconsistent() const { return inconsistent_; }

    const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }
    std::string render(bool pretty) const;

private:
    std::vector<std::pair<std::string, std::string>> fields_;
    bool inconsistent_ = false;
};

}  // namespace qsa
