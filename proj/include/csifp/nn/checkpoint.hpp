#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "csifp/core/binary_io.hpp"
#include "csifp/core/hash.hpp"
#include "csifp/nn/adamw.hpp"
#include "csifp/nn/network.hpp"
#include "csifp/nn/train_config.hpp"

namespace csifp::nn {

/// Complete training snapshot: enough to run inference or resume training.
struct Checkpoint {
    NetworkConfig network_config;
    TrainConfig train_config;
    std::vector<double> parameters;
    std::vector<double> buffers;
    AdamWState optimizer;
    std::uint32_t epochs_completed = 0;
    std::int32_t best_epoch = -1;
    double best_val_acc = -1.0;
    std::vector<EpochMetrics> history;
    Digest dataset_hash{};
    Digest config_hash{};

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline Checkpoint snapshot(Network& net, const AdamW& opt, const TrainConfig& train_cfg) {
    Checkpoint c;
    c.network_config = net.config();
    c.train_config = train_cfg;
    c.parameters = net.flat_parameters();
    c.buffers = net.flat_buffers();
    c.optimizer = opt.state();
    return c;
}

/// Loads weights and running statistics; the network's configuration must
/// match the checkpoint's.
inline void restore(Network& net, const Checkpoint& c) {
    if (!(net.config() == c.network_config)) {
        throw ShapeError("checkpoint network configuration does not match the target network");
    }
    net.set_flat_parameters(c.parameters);
    net.set_flat_buffers(c.buffers);
}

inline Network network_from(const Checkpoint& c) {
    Network net(c.network_config);
    restore(net, c);
    return net;
}

inline constexpr std::array<std::uint8_t, 8> kCheckpointMagic{'C', 'S', 'I', 'F', 'P', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

enum Tag : std::uint32_t { config = 1, provenance = 2, params = 3, buffers = 4, optimizer = 5, progress = 6 };

inline void put_doubles(io::ByteWriter& w, const std::vector<double>& v) {
    w.put(static_cast<std::uint64_t>(v.size()));
    for (double x : v) {
        w.put(x);
    }
}

inline std::vector<double> get_doubles(io::ByteReader& r) {
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / 8) {
        throw TruncationError("array length exceeds section size");
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
        x = r.get<double>();
    }
    return v;
}

inline Digest get_digest(io::ByteReader& r) {
    Digest d{};
    auto raw = r.get_bytes(d.size());
    std::memcpy(d.data(), raw.data(), d.size());
    return d;
}

} // namespace ckpt_detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    using namespace ckpt_detail;
    io::ByteWriter out;
    out.put_bytes(kCheckpointMagic);
    out.put(kCheckpointVersion);

    io::ByteWriter cfg;
    const auto& n = c.network_config;
    cfg.put(static_cast<std::int32_t>(n.in_channels));
    cfg.put(static_cast<std::int32_t>(n.in_height));
    cfg.put(static_cast<std::int32_t>(n.in_width));
    for (const auto& st : n.conv) {
        for (int v : {st.out_channels, st.kernel_h, st.kernel_w, st.stride, st.padding}) {
            cfg.put(static_cast<std::int32_t>(v));
        }
    }
    for (const auto& p : n.pool) {
        cfg.put(static_cast<std::int32_t>(p.window));
        cfg.put(static_cast<std::int32_t>(p.stride));
    }
    cfg.put(static_cast<std::int32_t>(n.n_classes));
    cfg.put(n.bn_epsilon);
    cfg.put(n.bn_momentum);
    cfg.put(n.init_seed);
    const auto& t = c.train_config;
    cfg.put(static_cast<std::int32_t>(t.epochs));
    cfg.put(static_cast<std::int32_t>(t.batch_size));
    cfg.put(t.learning_rate);
    cfg.put(t.weight_decay);
    cfg.put(t.beta1);
    cfg.put(t.beta2);
    cfg.put(t.epsilon);
    cfg.put(t.shuffle_seed);
    io::write_section(out, Tag::config, cfg);

    io::ByteWriter prov;
    prov.put_bytes(c.dataset_hash);
    prov.put_bytes(c.config_hash);
    io::write_section(out, Tag::provenance, prov);

    io::ByteWriter params;
    put_doubles(params, c.parameters);
    io::write_section(out, Tag::params, params);

    io::ByteWriter bufs;
    put_doubles(bufs, c.buffers);
    io::write_section(out, Tag::buffers, bufs);

    io::ByteWriter opt;
    opt.put(c.optimizer.t);
    put_doubles(opt, c.optimizer.m);
    put_doubles(opt, c.optimizer.v);
    io::write_section(out, Tag::optimizer, opt);

    io::ByteWriter prog;
    prog.put(c.epochs_completed);
    prog.put(c.best_epoch);
    prog.put(c.best_val_acc);
    prog.put(static_cast<std::uint32_t>(c.history.size()));
    for (const auto& h : c.history) {
        prog.put(static_cast<std::int32_t>(h.epoch));
        prog.put(h.train_loss);
        prog.put(h.train_acc);
        prog.put(h.val_loss);
        prog.put(h.val_acc);
    }
    io::write_section(out, Tag::progress, prog);
    return std::move(out.bytes());
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    using namespace ckpt_detail;
    io::ByteReader in(bytes);
    auto magic = in.get_bytes(kCheckpointMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic.begin())) {
        throw FormatVersionError("not a checkpoint file (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw FormatVersionError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    {
        io::ByteReader r(read_section(in, Tag::config, "config"));
        auto& n = c.network_config;
        n.in_channels = r.get<std::int32_t>();
        n.in_height = r.get<std::int32_t>();
        n.in_width = r.get<std::int32_t>();
        for (auto& st : n.conv) {
            st.out_channels = r.get<std::int32_t>();
            st.kernel_h = r.get<std::int32_t>();
            st.kernel_w = r.get<std::int32_t>();
            st.stride = r.get<std::int32_t>();
            st.padding = r.get<std::int32_t>();
        }
        for (auto& p : n.pool) {
            p.window = r.get<std::int32_t>();
            p.stride = r.get<std::int32_t>();
        }
        n.n_classes = r.get<std::int32_t>();
        n.bn_epsilon = r.get<double>();
        n.bn_momentum = r.get<double>();
        n.init_seed = r.get<std::uint64_t>();
        auto& t = c.train_config;
        t.epochs = r.get<std::int32_t>();
        t.batch_size = r.get<std::int32_t>();
        t.learning_rate = r.get<double>();
        t.weight_decay = r.get<double>();
        t.beta1 = r.get<double>();
        t.beta2 = r.get<double>();
        t.epsilon = r.get<double>();
        t.shuffle_seed = r.get<std::uint64_t>();
    }
    {
        io::ByteReader r(read_section(in, Tag::provenance, "provenance"));
        c.dataset_hash = get_digest(r);
        c.config_hash = get_digest(r);
    }
    {
        io::ByteReader r(read_section(in, Tag::params, "params"));
        c.parameters = get_doubles(r);
    }
    {
        io::ByteReader r(read_section(in, Tag::buffers, "buffers"));
        c.buffers = get_doubles(r);
    }
    {
        io::ByteReader r(read_section(in, Tag::optimizer, "optimizer"));
        c.optimizer.t = r.get<std::uint64_t>();
        c.optimizer.m = get_doubles(r);
        c.optimizer.v = get_doubles(r);
    }
    {
        io::ByteReader r(read_section(in, Tag::progress, "progress"));
        c.epochs_completed = r.get<std::uint32_t>();
        c.best_epoch = r.get<std::int32_t>();
        c.best_val_acc = r.get<double>();
        const auto rows = r.get<std::uint32_t>();
        if (rows > r.remaining() / 36) {
            throw TruncationError("history length exceeds section size");
        }
        c.history.resize(rows);
        for (auto& h : c.history) {
            h.epoch = r.get<std::int32_t>();
            h.train_loss = r.get<double>();
            h.train_acc = r.get<double>();
            h.val_loss = r.get<double>();
            h.val_acc = r.get<double>();
        }
    }
    if (in.remaining() != 0) {
        throw FormatVersionError("checkpoint has trailing bytes");
    }
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) { io::write_file(path, encode_checkpoint(c)); }

inline Checkpoint load_checkpoint(const std::string& path) {
    const auto bytes = io::read_file(path);
    return decode_checkpoint(bytes);
}

} // namespace csifp::nn
