#include "msmv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <cstdlib>
#include <sstream>

#include "msmv/error.hpp"

namespace msmv {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
    fail(Errc::BadConfig, "bad value '" + value + "' for " + key);
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) bad(key, value);
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    char* endp = nullptr;
    const double out = std::strtod(value.c_str(), &endp);
    if (value.empty() || endp != value.c_str() + value.size()) bad(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad(key, value);
}

std::vector<int> parse_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(key, trim(item))));
    if (out.empty()) bad(key, value);
    return out;
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <class T>
Field int_field(T RunConfig::*block, int T::*member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*block.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) {
                c.*block.*member = static_cast<int>(parse_int(k, v));
            }};
}

template <class T>
Field double_field(T RunConfig::*block, double T::*member) {
    return {[=](const RunConfig& c) { return fmt_double(c.*block.*member); },
            [=](RunConfig& c, const std::string& k, const std::string& v) { c.*block.*member = parse_double(k, v); }};
}

const std::map<std::string, Field>& fields() {
    using swin::BackboneConfig;
    using fusion::FusionConfig;
    using train::TrainConfig;
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        auto B = &RunConfig::backbone;
        auto F = &RunConfig::fusion;
        auto T = &RunConfig::train;
        t["backbone.input_side"] = int_field(B, &BackboneConfig::input_side);
        t["backbone.patch_size"] = int_field(B, &BackboneConfig::patch_size);
        t["backbone.embed_dim"] = int_field(B, &BackboneConfig::embed_dim);
        t["backbone.window_size"] = int_field(B, &BackboneConfig::window_size);
        t["backbone.feature_dim"] = int_field(B, &BackboneConfig::feature_dim);
        t["backbone.unfrozen_top_stages"] = int_field(B, &BackboneConfig::unfrozen_top_stages);
        t["backbone.in_channels"] = int_field(B, &BackboneConfig::in_channels);
        t["backbone.mlp_ratio"] = double_field(B, &BackboneConfig::mlp_ratio);
        t["backbone.depths"] = {[](const RunConfig& c) { return fmt_list(c.backbone.depths); },
                                [](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.backbone.depths = parse_list(k, v);
                                }};
        t["backbone.num_heads"] = {[](const RunConfig& c) { return fmt_list(c.backbone.num_heads); },
                                   [](RunConfig& c, const std::string& k, const std::string& v) {
                                       c.backbone.num_heads = parse_list(k, v);
                                   }};

        t["fusion.strategy"] = {[](const RunConfig& c) { return std::string(fusion::to_string(c.fusion.strategy)); },
                                [](RunConfig& c, const std::string&, const std::string& v) {
                                    c.fusion.strategy = fusion::strategy_from_string(v);
                                }};
        t["fusion.width"] = int_field(F, &FusionConfig::width);
        t["fusion.hidden"] = int_field(F, &FusionConfig::hidden);
        t["fusion.conv_out_channels"] = int_field(F, &FusionConfig::conv_out_channels);
        t["fusion.dropout_rate"] = double_field(F, &FusionConfig::dropout_rate);
        t["fusion.leaky_slope"] = double_field(F, &FusionConfig::leaky_slope);
        t["fusion.bn_momentum"] = double_field(F, &FusionConfig::bn_momentum);
        t["fusion.bn_eps"] = double_field(F, &FusionConfig::bn_eps);

        t["train.lr"] = double_field(T, &TrainConfig::lr);
        t["train.beta1"] = double_field(T, &TrainConfig::beta1);
        t["train.beta2"] = double_field(T, &TrainConfig::beta2);
        t["train.eps"] = double_field(T, &TrainConfig::eps);
        t["train.weight_decay"] = double_field(T, &TrainConfig::weight_decay);
        t["train.label_smoothing"] = double_field(T, &TrainConfig::label_smoothing);
        t["train.val_fraction"] = double_field(T, &TrainConfig::val_fraction);
        t["train.batch_size"] = int_field(T, &TrainConfig::batch_size);
        t["train.epochs"] = int_field(T, &TrainConfig::epochs);
        t["train.workers"] = int_field(T, &TrainConfig::workers);
        t["train.seed"] = {[](const RunConfig& c) { return std::to_string(c.train.seed); },
                           [](RunConfig& c, const std::string& k, const std::string& v) {
                               std::uint64_t out = 0;
                               const auto* end = v.data() + v.size();
                               const auto [ptr, ec] = std::from_chars(v.data(), end, out);
                               if (ec != std::errc{} || ptr != end) bad(k, v);
                               c.train.seed = out;
                           }};
        t["train.augment"] = {[](const RunConfig& c) { return std::string(c.train.augment ? "true" : "false"); },
                              [](RunConfig& c, const std::string& k, const std::string& v) {
                                  c.train.augment = parse_bool(k, v);
                              }};
        t["train.test_augment"] = {
            [](const RunConfig& c) { return std::string(c.train.test_augment ? "true" : "false"); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.test_augment = parse_bool(k, v); }};
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::resolve() {
    fusion.feature_dim = backbone.feature_dim;
    backbone.validate();
    fusion.validate();
    train.validate();
}

std::string serialize(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
    return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = fields().find(key);
    if (it == fields().end()) fail(Errc::BadConfig, "unknown config key '" + key + "'");
    it->second.set(cfg, key, value);
    cfg.fusion.feature_dim = cfg.backbone.feature_dim;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(Errc::BadConfig, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) fail(Errc::Io, "cannot write config " + path.string());
    out << serialize(cfg);
}

}  // namespace msmv
