#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "csifp/core/binary_io.hpp"
#include "csifp/dataset/fingerprint_dataset.hpp"

namespace csifp::dataset {

// Layout (all little-endian) is documented in docs/file_formats.md.
inline constexpr std::array<std::uint8_t, 8> kDatasetMagic{'C', 'S', 'I', 'F', 'P', 'D', 'A', 'T'};
inline constexpr std::uint32_t kDatasetVersion = 1;

namespace detail_io {

inline void put_tensor(io::SectionWriter& w, const FeatureMap& t) {
    for (float v : t.values()) {
        w.put(v);
    }
}

inline FeatureMap get_tensor(io::SectionReader& r, std::uint32_t rows, std::uint32_t cols) {
    FeatureMap t(rows, cols);
    for (auto& v : t.values()) {
        v = r.get<float>();
    }
    return t;
}

inline Digest get_digest(io::SectionReader& r) {
    Digest d{};
    r.get_bytes(d);
    return d;
}

/// Exact file size implied by a header; used to tell truncation from
/// trailing garbage before any payload is parsed.
inline std::uint64_t expected_size(std::uint32_t m, std::uint32_t b, std::uint64_t classes, std::uint64_t n_labeled,
                                   std::uint64_t n_test) {
    constexpr std::uint64_t kHeader = 8 + 7 * 4 + 32 + 32 + 8 + 4;
    const std::uint64_t values = std::uint64_t{m} * 2 * b;
    return kHeader + classes * 20 + 4 + n_labeled * (4 + 4 * values) + 8 + n_test * (20 + 4 * values) + 4;
}

inline void encode(const FingerprintDataset& ds, io::SectionWriter& w) {
    const std::uint32_t rows = ds.n_subcarriers;
    const std::uint32_t cols = 2 * ds.n_beams;
    auto check_shape = [&](const FeatureMap& t) {
        if (t.rows() != rows || t.cols() != cols) {
            throw ShapeError("dataset sample tensor shape does not match the header");
        }
    };
    w.put_bytes(kDatasetMagic);
    w.put(kDatasetVersion);
    w.put(rows);
    w.put(ds.n_beams);
    w.put(static_cast<std::uint32_t>(ds.reference_map.size()));
    w.put(static_cast<std::uint32_t>(ds.train.size()));
    w.put(static_cast<std::uint32_t>(ds.validation.size()));
    w.put(static_cast<std::uint32_t>(ds.test.size()));
    w.put_bytes(ds.provenance.scene_hash);
    w.put_bytes(ds.provenance.config_hash);
    w.put(ds.provenance.seed);
    w.end_section();

    for (const auto& e : ds.reference_map) {
        w.put(e.class_id);
        w.put(e.x);
        w.put(e.y);
    }
    w.end_section();

    for (const auto* part : {&ds.train, &ds.validation}) {
        for (const auto& s : *part) {
            check_shape(s.tensor);
            w.put(s.class_id);
            put_tensor(w, s.tensor);
        }
        w.end_section();
    }

    for (const auto& t : ds.test) {
        check_shape(t.tensor);
        w.put(t.test_point_id);
        w.put(t.true_position.x);
        w.put(t.true_position.y);
        put_tensor(w, t.tensor);
    }
    w.end_section();
    w.flush();
}

inline FingerprintDataset decode(io::SectionReader& r, std::uint64_t total_size) {
    std::array<std::uint8_t, 8> magic{};
    r.get_bytes(magic);
    if (magic != kDatasetMagic) {
        throw FormatVersionError("not a dataset file (bad magic)");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw FormatVersionError("unsupported dataset format version " + std::to_string(version));
    }
    FingerprintDataset ds;
    ds.n_subcarriers = r.get<std::uint32_t>();
    ds.n_beams = r.get<std::uint32_t>();
    const auto n_classes = r.get<std::uint32_t>();
    const auto n_train = r.get<std::uint32_t>();
    const auto n_val = r.get<std::uint32_t>();
    const auto n_test = r.get<std::uint32_t>();
    ds.provenance.scene_hash = get_digest(r);
    ds.provenance.config_hash = get_digest(r);
    ds.provenance.seed = r.get<std::uint64_t>();
    r.end_section("header");

    const auto expected =
        expected_size(ds.n_subcarriers, ds.n_beams, n_classes, std::uint64_t{n_train} + n_val, n_test);
    if (total_size < expected) {
        throw TruncationError("dataset file is truncated: " + std::to_string(total_size) + " of " +
                              std::to_string(expected) + " bytes");
    }
    if (total_size > expected) {
        throw FormatVersionError("dataset file has trailing bytes");
    }

    const auto rows = ds.n_subcarriers;
    const auto cols = 2 * ds.n_beams;
    ds.reference_map.resize(n_classes);
    for (auto& e : ds.reference_map) {
        e.class_id = r.get<std::uint32_t>();
        e.x = r.get<double>();
        e.y = r.get<double>();
    }
    r.end_section("reference_map");

    auto read_labeled = [&](std::vector<LabeledSample>& out, std::uint32_t n, const char* name) {
        out.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            LabeledSample s;
            s.class_id = r.get<std::uint32_t>();
            if (s.class_id >= n_classes) {
                throw FormatVersionError("sample class id outside the reference map");
            }
            s.tensor = get_tensor(r, rows, cols);
            out.push_back(std::move(s));
        }
        r.end_section(name);
    };
    read_labeled(ds.train, n_train, "train");
    read_labeled(ds.validation, n_val, "validation");

    ds.test.reserve(n_test);
    for (std::uint32_t i = 0; i < n_test; ++i) {
        TestRecord t;
        t.test_point_id = r.get<std::uint32_t>();
        t.true_position.x = r.get<double>();
        t.true_position.y = r.get<double>();
        t.tensor = get_tensor(r, rows, cols);
        ds.test.push_back(std::move(t));
    }
    r.end_section("test");
    return ds;
}

} // namespace detail_io

inline std::vector<std::uint8_t> encode_dataset(const FingerprintDataset& ds) {
    std::vector<std::uint8_t> out;
    io::SectionWriter w([&](std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); });
    detail_io::encode(ds, w);
    return out;
}

inline FingerprintDataset decode_dataset(std::span<const std::uint8_t> bytes) {
    auto r = io::SectionReader::over(bytes);
    return detail_io::decode(r, bytes.size());
}

/// Streams to disk; memory use stays at one copy of the dataset.
inline void save_dataset(const FingerprintDataset& ds, const std::string& path) {
    io::write_file_atomic(path, [&](std::ofstream& out) {
        io::SectionWriter w([&](std::span<const std::uint8_t> b) {
            out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
        });
        detail_io::encode(ds, w);
    });
}

inline FingerprintDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError("cannot open '" + path + "' for reading");
    }
    const auto size = std::filesystem::file_size(path);
    io::SectionReader r([&](std::span<std::uint8_t> buf) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        return static_cast<std::size_t>(in.gcount());
    });
    return detail_io::decode(r, size);
}

} // namespace csifp::dataset
