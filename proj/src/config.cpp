#include "nplab/config.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nplab::config {

namespace {

void merge_into(nlohmann::json& base, const nlohmann::json& over) {
    if (!base.is_object() || !over.is_object()) {
        base = over;
        return;
    }
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            merge_into(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

} // namespace

nlohmann::json load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config: parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config: top level must be an object in " + path);

    nlohmann::json merged = nlohmann::json::object();
    if (j.contains("include")) {
        const auto dir = std::filesystem::path(path).parent_path();
        std::vector<std::string> incs;
        if (j["include"].is_string())
            incs.push_back(j["include"].get<std::string>());
        else if (j["include"].is_array())
            for (const auto& e : j["include"]) incs.push_back(e.get<std::string>());
        else
            throw std::runtime_error("config: 'include' must be a path or list of paths in " + path);
        for (const auto& inc : incs) {
            const auto sub = load((dir / inc).string());
            merge_into(merged, sub);
        }
        j.erase("include");
    }
    merge_into(merged, j);
    return merged;
}

void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                        const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw std::runtime_error("config: unknown key '" + where + "." + it.key() + "'");
    }
}

double get_number(const nlohmann::json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw std::runtime_error("config: '" + key + "' must be a number");
    return j[key].get<double>();
}

std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw std::runtime_error("config: '" + key + "' must be a string");
    return j[key].get<std::string>();
}

} // namespace nplab::config
