#pragma once

#include <string>
#include <vector>

namespace shlr {

enum class Verdict { Pass, Fail, Unreliable };

inline const char* verdict_str(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "unreliable";
    }
}

struct CheckItem {
    std::string check;
    Verdict verdict = Verdict::Pass;
    std::string witness;  // reproducible expression for failures
};

struct Report {
    std::vector<CheckItem> items;
    std::string bounds;  // truncation bounds used, human-readable
    unsigned long long seed = 0;

    void pass(const std::string& check) { items.push_back({check, Verdict::Pass, ""}); }
    void fail(const std::string& check, const std::string& witness) {
        items.push_back({check, Verdict::Fail, witness});
    }
    void unreliable(const std::string& check, const std::string& note) {
        items.push_back({check, Verdict::Unreliable, note});
    }
    void require(bool ok, const std::string& check, const std::string& witness) {
        if (ok)
            pass(check);
        else
            fail(check, witness);
    }
    void merge(const Report& other, const std::string& prefix = "") {
        for (auto it : other.items) {
            if (!prefix.empty()) it.check = prefix + "." + it.check;
            items.push_back(std::move(it));
        }
    }

    bool ok() const {
        for (auto& it : items)
            if (it.verdict == Verdict::Fail) return false;
        return true;
    }
    int failures() const {
        int n = 0;
        for (auto& it : items)
            if (it.verdict == Verdict::Fail) ++n;
        return n;
    }
};

}  // namespace shlr
