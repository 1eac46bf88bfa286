#include "qsa/report.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <sstream>

namespace qsa {

void AnalysisReport::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : fields_)
        if (k == key) {
            v = value;
            return;
        }
    fields_.emplace_back(key, value);
}

void AnalysisReport::set(const std::string& key, bool value) {
    set(key, std::string(value ? "true" : "false"));
}

void AnalysisReport::set(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

void AnalysisReport::set(const std::string& key, std::uint64_t value) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    set(key, os.str());
}

void AnalysisReport::set(const std::string& key, double value) {
    std::ostringstream os;
    os << std::setprecision(12) << value;
    set(key, os.str());
}

void AnalysisReport::flag_inconsistent(const std::string& why) {
    inconsistent_ = true;
    set("inconsistent", true);
    set("inconsistent_reason", why);
}

std::string AnalysisReport::render(bool pretty) const {
    std::ostringstream os;
    if (!pretty) {
        for (const auto& [k, v] : fields_) os << k << " = " << v << "\n";
        return os.str();
    }
    size_t width = 0;
    for (const auto& [k, v] : fields_) width = std::max(width, k.size());
    for (const auto& [k, v] : fields_)
        os << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << "\n";
    return os.str();
}

}  // namespace qsa
