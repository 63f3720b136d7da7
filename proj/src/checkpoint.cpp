#include "checkpoint.hpp"

#include "sha256.hpp"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ufv {

namespace {

constexpr char kMagic[8] = {'U', 'F', 'V', 'P', 'A', 'R', 'A', 'M'};
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char(v >> (8 * i)));
}
void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char(v >> (8 * i)));
}
uint32_t get_u32(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

json lineage_to_json(const std::vector<LineageEntry>& lineage) {
    json arr = json::array();
    for (const auto& e : lineage) arr.push_back({{"role", e.role}, {"path", e.path}, {"sha256", e.sha256}});
    return arr;
}

std::vector<LineageEntry> lineage_from_json(const json& arr) {
    std::vector<LineageEntry> out;
    for (const auto& e : arr)
        out.push_back({e.at("role").get<std::string>(), e.at("path").get<std::string>(),
                       e.at("sha256").get<std::string>()});
    return out;
}

}  // namespace

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// ----------------------------------------------------------- spec <-> json --

json srg_spec_to_json(const SrgSpec& s) {
    return {{"hr_size", s.hr_size}, {"base_ch", s.base_ch}, {"global_skip", s.global_skip}};
}

SrgSpec srg_spec_from_json(const json& j) {
    SrgSpec s;
    s.hr_size = j.at("hr_size").get<int>();
    s.base_ch = j.at("base_ch").get<int>();
    s.global_skip = j.at("global_skip").get<bool>();
    return s;
}

json regressor_spec_to_json(const RegressorSpec& s) {
    return {{"input_size", s.input_size},
            {"k", s.k},
            {"conv_ch", s.conv_ch},
            {"fc_dim", s.fc_dim}};
}

RegressorSpec regressor_spec_from_json(const json& j) {
    RegressorSpec s;
    s.input_size = j.at("input_size").get<int>();
    s.k = j.at("k").get<int>();
    auto cc = j.at("conv_ch").get<std::vector<int>>();
    auto fd = j.at("fc_dim").get<std::vector<int>>();
    if (cc.size() != 5 || fd.size() != 2) throw RuntimeFailure("bad regressor spec in sidecar");
    std::copy(cc.begin(), cc.end(), s.conv_ch.begin());
    std::copy(fd.begin(), fd.end(), s.fc_dim.begin());
    return s;
}

json ufv_spec_to_json(const UfvSpec& s) {
    json anchors = json::array();
    for (const auto& a : s.anchors) anchors.push_back(a.str());
    return {{"hr_size", s.hr_size},
            {"base_ch", s.base_ch},
            {"global_skip", s.global_skip},
            {"variant", variant_name(s.variant)},
            {"tag", s.tag()},
            {"anchors", anchors},
            {"regressor", regressor_spec_to_json(s.regressor)}};
}

UfvSpec ufv_spec_from_json(const json& j) {
    UfvSpec s;
    s.hr_size = j.at("hr_size").get<int>();
    s.base_ch = j.at("base_ch").get<int>();
    s.global_skip = j.at("global_skip").get<bool>();
    s.variant = parse_variant(j.at("variant").get<std::string>());
    s.anchors.clear();
    for (const auto& a : j.at("anchors")) s.anchors.push_back(parse_fraction(a.get<std::string>()));
    s.regressor = regressor_spec_from_json(j.at("regressor"));
    return s;
}

json anchor_config_json(const AnchorConfig& c) {
    json anchors = json::array();
    for (const auto& a : c.anchors) anchors.push_back(a.str());
    json rates = json::array();
    for (const auto& r : c.rate_set) rates.push_back(r.str());
    return {{"hr_size", c.hr_size}, {"anchors", anchors}, {"rates", rates}};
}

AnchorConfig anchor_config_from_json_meta(const json& j) {
    AnchorConfig c;
    c.hr_size = j.at("hr_size").get<int>();
    c.anchors.clear();
    for (const auto& a : j.at("anchors")) c.anchors.push_back(parse_fraction(a.get<std::string>()));
    c.rate_set.clear();
    for (const auto& r : j.at("rates")) c.rate_set.push_back(parse_fraction(r.get<std::string>()));
    return c;
}

// ------------------------------------------------------------ save / load --

std::string save_checkpoint(const ParamList<float>& params, CheckpointMeta meta,
                            const std::string& path) {
    std::string body;
    body.append(kMagic, sizeof(kMagic));
    put_u32(body, kFormatVersion);
    put_u32(body, uint32_t(params.size()));
    for (const auto& p : params) {
        if (p.name.size() > 0xffff) throw RuntimeFailure("parameter name too long");
        put_u32(body, uint32_t(p.name.size()));
        body.append(p.name);
        put_u32(body, uint32_t(p.value->rank()));
        for (int d = 0; d < p.value->rank(); ++d) put_u32(body, uint32_t(p.value->dim(d)));
        uint64_t bytes = uint64_t(p.value->numel()) * sizeof(float);
        put_u64(body, bytes);
        body.append(reinterpret_cast<const char*>(p.value->data()), size_t(bytes));
    }
    std::string hash = sha256_hex(body);

    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw RuntimeFailure("cannot write checkpoint: " + path);
        f.write(body.data(), std::streamsize(body.size()));
        f.write(hash.data(), std::streamsize(hash.size()));
        if (!f) throw RuntimeFailure("short write on checkpoint: " + path);
    }
    fs::rename(tmp, target);

    meta.params_sha256 = hash;
    if (meta.created_utc.empty()) meta.created_utc = utc_timestamp();
    meta.tool_version = kToolVersion;
    int64_t param_count = 0;
    for (const auto& p : params) param_count += p.value->numel();
    json side;
    side["format_version"] = kFormatVersion;
    side["kind"] = meta.kind;
    side["param_count"] = param_count;
    side["spec"] = meta.spec;
    side["anchor_config"] = meta.anchor_config;
    side["stage"] = {{"name", meta.stage.stage},
                     {"step", meta.stage.step},
                     {"loss_sr", meta.stage.loss_sr},
                     {"loss_wt", meta.stage.loss_wt},
                     {"loss_total", meta.stage.loss_total}};
    side["lineage"] = lineage_to_json(meta.lineage);
    side["seed"] = meta.seed;
    side["params_sha256"] = meta.params_sha256;
    side["run_manifest"] = meta.run_manifest;
    side["created_utc"] = meta.created_utc;
    side["tool_version"] = meta.tool_version;

    fs::path side_tmp = target;
    side_tmp += ".json.tmp";
    {
        std::ofstream f(side_tmp);
        f << side.dump(2) << "\n";
        if (!f) throw RuntimeFailure("cannot write checkpoint sidecar for " + path);
    }
    fs::rename(side_tmp, fs::path(path + ".json"));
    return hash;
}

const Tensor* LoadedCheckpoint::find(const std::string& name) const {
    for (const auto& [n, t] : params)
        if (n == name) return &t;
    return nullptr;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw RuntimeFailure("cannot open checkpoint: " + path);
    std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() < sizeof(kMagic) + 8 + 64)
        throw RuntimeFailure("checkpoint integrity error (truncated): " + path);

    std::string stored_hash = raw.substr(raw.size() - 64);
    std::string body = raw.substr(0, raw.size() - 64);
    if (std::memcmp(body.data(), kMagic, sizeof(kMagic)) != 0)
        throw RuntimeFailure("not a checkpoint archive: " + path);
    if (sha256_hex(body) != stored_hash)
        throw RuntimeFailure("checkpoint integrity error (hash mismatch): " + path);

    const uint8_t* p = reinterpret_cast<const uint8_t*>(body.data());
    const uint8_t* end = p + body.size();
    p += sizeof(kMagic);
    uint32_t version = get_u32(p);
    p += 4;
    if (version != kFormatVersion)
        throw RuntimeFailure("unsupported checkpoint format version " + std::to_string(version));
    uint32_t count = get_u32(p);
    p += 4;

    LoadedCheckpoint out;
    out.params.reserve(count);
    auto need = [&](size_t n) {
        if (size_t(end - p) < n) throw RuntimeFailure("checkpoint integrity error: " + path);
    };
    for (uint32_t i = 0; i < count; ++i) {
        need(4);
        uint32_t name_len = get_u32(p);
        p += 4;
        need(name_len + 4);
        std::string name(reinterpret_cast<const char*>(p), name_len);
        p += name_len;
        uint32_t rank = get_u32(p);
        p += 4;
        if (rank < 1 || rank > 4) throw RuntimeFailure("bad tensor rank in checkpoint: " + path);
        need(size_t(rank) * 4 + 8);
        std::vector<int> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = int(get_u32(p));
            p += 4;
        }
        uint64_t bytes = get_u64(p);
        p += 8;
        Tensor t(shape);
        if (bytes != uint64_t(t.numel()) * sizeof(float))
            throw RuntimeFailure("tensor payload size mismatch in checkpoint: " + path);
        need(size_t(bytes));
        std::memcpy(t.data(), p, size_t(bytes));
        p += bytes;
        out.params.emplace_back(std::move(name), std::move(t));
    }

    // sidecar
    std::ifstream sf(path + ".json");
    if (!sf) throw RuntimeFailure("missing checkpoint sidecar: " + path + ".json");
    json side;
    try {
        sf >> side;
    } catch (const json::exception& e) {
        throw RuntimeFailure("malformed checkpoint sidecar " + path + ".json: " + e.what());
    }
    CheckpointMeta& m = out.meta;
    m.kind = side.at("kind").get<std::string>();
    m.spec = side.at("spec");
    m.anchor_config = side.value("anchor_config", json::object());
    m.stage.stage = side.at("stage").at("name").get<std::string>();
    m.stage.step = side.at("stage").at("step").get<int64_t>();
    m.stage.loss_sr = side.at("stage").value("loss_sr", 0.0);
    m.stage.loss_wt = side.at("stage").value("loss_wt", 0.0);
    m.stage.loss_total = side.at("stage").value("loss_total", 0.0);
    m.lineage = lineage_from_json(side.value("lineage", json::array()));
    m.seed = side.value("seed", uint64_t(0));
    m.params_sha256 = side.at("params_sha256").get<std::string>();
    m.run_manifest = side.value("run_manifest", "");
    m.created_utc = side.value("created_utc", "");
    m.tool_version = side.value("tool_version", "");
    if (m.params_sha256 != stored_hash)
        throw RuntimeFailure("sidecar/archive hash disagreement for " + path);
    return out;
}

void load_into(const LoadedCheckpoint& ck, ParamList<float>& dst, bool allow_extra) {
    std::set<std::string> used;
    for (auto& d : dst) {
        const Tensor* src = ck.find(d.name);
        if (!src)
            throw RuntimeFailure("checkpoint is missing parameter '" + d.name + "'");
        if (!src->same_shape(*d.value))
            throw RuntimeFailure("checkpoint parameter '" + d.name + "' has shape " +
                                 src->shape_str() + ", expected " + d.value->shape_str());
        *d.value = *src;
        used.insert(d.name);
    }
    if (ck.params.size() != used.size()) {
        size_t extra = ck.params.size() - used.size();
        std::string example;
        for (const auto& [n, t] : ck.params)
            if (!used.count(n)) {
                example = n;
                break;
            }
        if (!allow_extra)
            throw RuntimeFailure("checkpoint carries " + std::to_string(extra) +
                                 " unexpected parameter(s), e.g. '" + example + "'");
        log_info("dropping " + std::to_string(extra) +
                 " parameter(s) not used by the target graph (e.g. '" + example + "')");
    }
}

}  // namespace ufv
