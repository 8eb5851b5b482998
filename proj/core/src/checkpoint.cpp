#include "vcnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vcnet/rng.hpp"

using json = nlohmann::json;

namespace vcnet::checkpoint {

namespace {

json model_config_to_json(const model::ModelConfig& c) {
    return {{"num_classes", c.num_classes},   {"stride", c.stride},
            {"encoder_channels", c.encoder_channels}, {"embed_dim", c.embed_dim},
            {"proj_hidden", c.proj_hidden},   {"dropout_p", c.dropout_p},
            {"bn_momentum", c.bn_momentum},   {"init_seed", c.init_seed}};
}

model::ModelConfig model_config_from_json(const json& j) {
    model::ModelConfig c;
    c.num_classes = j.at("num_classes").get<int>();
    c.stride = j.at("stride").get<int>();
    c.encoder_channels = j.at("encoder_channels").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.proj_hidden = j.at("proj_hidden").get<int>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

void write_raw(std::ofstream& f, const void* data, std::size_t bytes) {
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

} // namespace

void save_checkpoint(const std::string& path, model::VcNet& net,
                     const vqcl::ClassCenters& centers, int epoch,
                     const std::string& train_config_json) {
    nn::ParamList params;
    nn::BufferList buffers;
    net.collect_state(params, buffers);

    json header;
    header["format"] = 1;
    header["epoch"] = epoch;
    header["model"] = model_config_to_json(net.config());
    header["train_config"] = train_config_json;
    header["config_hash"] = fnv1a(train_config_json);
    header["centers"] = {{"num_classes", centers.num_classes()},
                         {"dim", centers.dim()},
                         {"iteration", centers.iteration()},
                         {"raw", centers.raw_storage()}};

    std::uint64_t offset = 0;
    json tensors = json::array();
    for (const auto& [name, t] : params) {
        const auto& s = t.shape();
        tensors.push_back({{"name", name},
                           {"shape", {s.n, s.c, s.h, s.w}},
                           {"offset", offset},
                           {"count", t.value().size()}});
        offset += t.value().size() * sizeof(double);
    }
    header["tensors"] = tensors;
    json bufs = json::array();
    for (const auto& [name, v] : buffers) {
        bufs.push_back({{"name", name}, {"offset", offset}, {"count", v->size()}});
        offset += v->size() * sizeof(double);
    }
    header["buffers"] = bufs;

    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("checkpoint.save", "cannot open " + path + " for writing");
    write_raw(f, kMagic, sizeof kMagic);
    const std::uint64_t hlen = hs.size();
    write_raw(f, &hlen, sizeof hlen);
    write_raw(f, hs.data(), hs.size());
    for (const auto& [name, t] : params)
        write_raw(f, t.value().data(), t.value().size() * sizeof(double));
    for (const auto& [name, v] : buffers) write_raw(f, v->data(), v->size() * sizeof(double));
    if (!f) throw Error("checkpoint.save", "write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("checkpoint.load", "cannot open " + path);

    char magic[8];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw Error("checkpoint.load", path + " is not a checkpoint archive");
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw Error("checkpoint.load", "truncated header in " + path);
    const json header = json::parse(hs);
    if (header.at("format").get<int>() != 1)
        throw Error("checkpoint.load", "unsupported checkpoint format");

    LoadedCheckpoint out;
    out.epoch = header.at("epoch").get<int>();
    out.train_config_json = header.at("train_config").get<std::string>();
    out.config_hash = header.at("config_hash").get<std::uint64_t>();
    if (out.config_hash != fnv1a(out.train_config_json))
        throw Error("checkpoint.load", "config hash mismatch (corrupted archive?)");

    out.net = std::make_unique<model::VcNet>(model_config_from_json(header.at("model")));

    const auto& jc = header.at("centers");
    out.centers = vqcl::ClassCenters(jc.at("num_classes").get<int>(), jc.at("dim").get<int>());
    out.centers.restore(jc.at("raw").get<std::vector<double>>(), jc.at("iteration").get<long>());

    nn::ParamList params;
    nn::BufferList buffers;
    out.net->collect_state(params, buffers);

    const std::streampos data_start = f.tellg();
    auto read_block = [&](std::uint64_t offset, double* dst, std::size_t count) {
        f.seekg(data_start + static_cast<std::streamoff>(offset));
        f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(double)));
        if (!f) throw Error("checkpoint.load", "truncated tensor data in " + path);
    };

    const json& jt = header.at("tensors");
    if (jt.size() != params.size())
        throw Error("checkpoint.load", "checkpoint/config mismatch: tensor count differs");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& e = jt.at(i);
        if (e.at("name").get<std::string>() != params[i].first)
            throw Error("checkpoint.load", "checkpoint/config mismatch: expected tensor '" +
                                               params[i].first + "', found '" +
                                               e.at("name").get<std::string>() + "'");
        auto& dst = params[i].second.raw_value();
        if (e.at("count").get<std::size_t>() != dst.size())
            throw Error("checkpoint.load",
                        "checkpoint/config mismatch: size differs for " + params[i].first);
        read_block(e.at("offset").get<std::uint64_t>(), dst.data(), dst.size());
    }
    const json& jb = header.at("buffers");
    if (jb.size() != buffers.size())
        throw Error("checkpoint.load", "checkpoint/config mismatch: buffer count differs");
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        const json& e = jb.at(i);
        if (e.at("name").get<std::string>() != buffers[i].first)
            throw Error("checkpoint.load", "checkpoint/config mismatch: expected buffer '" +
                                               buffers[i].first + "'");
        auto& dst = *buffers[i].second;
        if (e.at("count").get<std::size_t>() != dst.size())
            throw Error("checkpoint.load",
                        "checkpoint/config mismatch: size differs for " + buffers[i].first);
        read_block(e.at("offset").get<std::uint64_t>(), dst.data(), dst.size());
    }
    return out;
}

} // namespace vcnet::checkpoint
