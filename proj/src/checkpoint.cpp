// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "metaconcept/error.hpp"

namespace metaconcept {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'M', 'C', 'C', 'K'};

void write_tensor(std::ostream& os, const Tensor& t) {
    io::write_le(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) io::write_le(os, static_cast<std::uint64_t>(d));
    for (double v : t.data()) io::write_f64(os, v);
}

Tensor read_tensor(std::istream& is) {
    const auto rank = io::read_le<std::uint32_t>(is);
    if (rank == 0 || rank > 8) throw DataError("checkpoint tensor has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t volume = 1;
    for (auto& d : shape) {
        d = static_cast<std::size_t>(io::read_le<std::uint64_t>(is));
        if (d == 0 || d > (1u << 26)) throw DataError("checkpoint tensor has an implausible extent");
        volume *= d;
    }
    if (volume > (1u << 28)) throw DataError("checkpoint tensor is implausibly large");
    std::vector<double> data(volume);
    for (auto& v : data) v = io::read_f64(is);
    return Tensor(std::move(shape), std::move(data));
}

void write_tensors(std::ostream& os, const std::vector<Tensor>& ts) {
    io::write_le(os, static_cast<std::uint32_t>(ts.size()));
    for (const auto& t : ts) write_tensor(os, t);
}

std::vector<Tensor> read_tensors(std::istream& is) {
    const auto n = io::read_le<std::uint32_t>(is);
    if (n > 100000) throw DataError("checkpoint lists an implausible number of tensors");
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(read_tensor(is));
    return out;
}

}  // namespace

void write_checkpoint(const fs::path& path, const CheckpointData& data) {
    const fs::path tmp = fs::path(path).concat(".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint " + tmp.string());
        out.write(kMagic, 4);
        io::write_le(out, std::uint32_t{1});
        io::write_le(out, data.config_hash);
        io::write_le(out, data.iteration);
        io::write_le(out, static_cast<std::uint32_t>(data.rng_states.size()));
        for (const auto& s : data.rng_states) io::write_string(out, s);
        write_tensors(out, data.params);
        write_tensors(out, data.velocity);
        if (!out) throw DataError("failed while writing checkpoint " + tmp.string());
    }
    fs::rename(tmp, path);
}

CheckpointData read_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw DataError(path.string() + " is not a checkpoint file");
    }
    if (io::read_le<std::uint32_t>(in) != 1) throw DataError("unsupported checkpoint version in " + path.string());
    CheckpointData data;
    data.config_hash = io::read_le<std::uint64_t>(in);
    data.iteration = io::read_le<std::uint64_t>(in);
    const auto streams = io::read_le<std::uint32_t>(in);
    if (streams > 64) throw DataError("checkpoint lists an implausible number of random streams");
    for (std::uint32_t i = 0; i < streams; ++i) data.rng_states.push_back(io::read_string(in));
    data.params = read_tensors(in);
    data.velocity = read_tensors(in);
    return data;
}

void assign_parameters(const ModelParams& params, const std::vector<Tensor>& values) {
    auto all = params.all();
    if (all.size() != values.size()) {
        throw DataError("checkpoint holds " + std::to_string(values.size()) + " tensors, the model has " +
                        std::to_string(all.size()));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!all[i].value().same_shape(values[i])) {
            throw DataError("checkpoint tensor " + std::to_string(i) + " has shape " + shape_string(values[i].shape()) +
                            ", the model expects " + shape_string(all[i].shape()));
        }
    }
    for (std::size_t i = 0; i < all.size(); ++i) all[i].mutable_value() = values[i];
}

void Trainer::save_checkpoint(const fs::path& path, std::uint64_t config_hash) const {
    CheckpointData data;
    data.config_hash = config_hash;
    data.iteration = iteration_;
    data.rng_states = {entity_rng_.state(), concept_rng_.state(), dropout_rng_.state()};
    for (const auto& p : params_.all()) data.params.push_back(p.value());
    data.velocity = optimizer_.velocity;
    write_checkpoint(path, data);
}

void Trainer::load_checkpoint(const fs::path& path, std::uint64_t config_hash) {
    CheckpointData data = read_checkpoint(path);
    if (data.config_hash != config_hash) {
        throw DataError("checkpoint " + path.string() + " was written under a different configuration");
    }
    if (data.rng_states.size() != 3) throw DataError("checkpoint " + path.string() + " lacks the training streams");
    assign_parameters(params_, data.params);
    if (!data.velocity.empty() && data.velocity.size() != data.params.size()) {
        throw DataError("checkpoint velocity count does not match the parameters");
    }
    optimizer_.velocity = std::move(data.velocity);
    iteration_ = static_cast<std::size_t>(data.iteration);
    entity_rng_.set_state(data.rng_states[0]);
    concept_rng_.set_state(data.rng_states[1]);
    dropout_rng_.set_state(data.rng_states[2]);
}

}  // namespace metaconcept
