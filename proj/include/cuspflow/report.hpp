#pragma once

#include <string>

#include <json.hpp>

namespace cuspflow {

/// Outcome of one property check; serialized as {check, params, value, tolerance, pass}.
struct CheckReport {
    std::string check;
    nlohmann::json params = nlohmann::json::object();
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;

    nlohmann::json to_json() const {
        nlohmann::json j{{"check", check}, {"params", params}, {"value", value},
                         {"tolerance", tolerance}, {"pass", pass}};
        if (!note.empty()) j["note"] = note;
        return j;
    }
};

}  // namespace cuspflow
