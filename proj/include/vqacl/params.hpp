#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "vqacl/tensor.hpp"

namespace vqacl {

// Named trainable tensors. std::map keeps names in lexicographic order so
// flattening into one coordinate vector is reproducible.
struct ParamStore {
    std::map<std::string, Tensor> entries;
    std::uint64_t rng_seed = 0;

    Tensor& at(const std::string& name) { return entries.at(name); }
    const Tensor& at(const std::string& name) const { return entries.at(name); }
    void insert(const std::string& name, Tensor t);
    std::size_t size() const { return entries.size(); }
    // total scalar coordinate count across all tensors
    std::int64_t coordinate_count() const;

    bool operator==(const ParamStore& other) const;
};

// Training metadata stored next to a checkpoint as "<path>.json".
struct CheckpointSidecar {
    std::string config_hash;
    std::uint64_t seed = 0;
    int epoch = 0;
    double val_metric = 0.0;
};

// Binary container: magic "VQCP", u32 version, u64 header length, JSON header
// {format_version, dtype, rng_seed, params:[{name, shape}]}, then the tensors'
// raw little-endian float64 payloads in header order. Round-trips bit-exactly.
void save_checkpoint(const ParamStore& params, const std::filesystem::path& path,
                     const std::optional<CheckpointSidecar>& sidecar = std::nullopt);
ParamStore load_checkpoint(const std::filesystem::path& path,
                           CheckpointSidecar* sidecar = nullptr);

void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

class CheckpointError : public Error {
  public:
    CheckpointError(const std::string& msg, std::uint64_t offset)
        : Error(msg + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

  private:
    std::uint64_t offset_;
};

}  // namespace vqacl
