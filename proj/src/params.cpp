#include "vqacl/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace vqacl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

void ParamStore::insert(const std::string& name, Tensor t) {
    if (entries.count(name)) throw Error("duplicate parameter name: " + name);
    t.requires_grad = true;
    entries.emplace(name, std::move(t));
}

std::int64_t ParamStore::coordinate_count() const {
    std::int64_t n = 0;
    for (const auto& [_, t] : entries) n += t.numel();
    return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
    if (rng_seed != other.rng_seed || entries.size() != other.entries.size()) return false;
    auto it = entries.begin();
    auto jt = other.entries.begin();
    for (; it != entries.end(); ++it, ++jt) {
        if (it->first != jt->first || it->second.shape != jt->second.shape ||
            it->second.data != jt->second.data)
            return false;
    }
    return true;
}

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path,
                     const std::optional<CheckpointSidecar>& sidecar) {
    nlohmann::ordered_json header;
    header["format_version"] = kVersion;
    header["dtype"] = "float64";
    header["rng_seed"] = params.rng_seed;
    header["params"] = nlohmann::ordered_json::array();
    for (const auto& [name, t] : params.entries) {
        header["params"].push_back({{"name", name}, {"shape", t.shape}});
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [_, t] : params.entries) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw Error("short write while saving checkpoint: " + path.string());
    out.close();

    if (sidecar) {
        nlohmann::ordered_json side;
        side["config_hash"] = sidecar->config_hash;
        side["seed"] = sidecar->seed;
        side["epoch"] = sidecar->epoch;
        side["val_metric"] = sidecar->val_metric;
        std::ofstream sout(path.string() + ".json", std::ios::trunc);
        sout << side.dump(2) << "\n";
    }
}

ParamStore load_checkpoint(const std::filesystem::path& path, CheckpointSidecar* sidecar) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic", 0);

    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version), 4);

    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in) throw CheckpointError("truncated header length", 8);

    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw CheckpointError("truncated header", 16);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("header is not valid JSON: ") + e.what(), 16);
    }

    ParamStore params;
    params.rng_seed = header.at("rng_seed").get<std::uint64_t>();
    std::uint64_t offset = 16 + header_len;
    for (const auto& entry : header.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        Tensor t = Tensor::zeros(shape.empty() ? std::vector<int>{} : shape);
        if (shape.empty()) t = Tensor::scalar(0.0);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in)
            throw CheckpointError("truncated payload for parameter " + name, offset);
        offset += t.data.size() * sizeof(double);
        params.insert(name, std::move(t));
    }
    // trailing garbage means a corrupt or mismatched file
    in.peek();
    if (!in.eof()) throw CheckpointError("unexpected trailing bytes", offset);

    if (sidecar) {
        std::ifstream sin(path.string() + ".json");
        if (sin) {
            nlohmann::json side = nlohmann::json::parse(sin);
            sidecar->config_hash = side.value("config_hash", "");
            sidecar->seed = side.value("seed", std::uint64_t{0});
            sidecar->epoch = side.value("epoch", 0);
            sidecar->val_metric = side.value("val_metric", 0.0);
        }
    }
    return params;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
    save_checkpoint(params, path);
}

ParamStore load_params(const std::filesystem::path& path) { return load_checkpoint(path); }

}  // namespace vqacl
