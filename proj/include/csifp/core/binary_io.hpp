#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <zlib.h>

#include "csifp/core/error.hpp"

namespace csifp::io {

/// CRC-32 of `bytes`, continuing from `crc` (0 starts a new checksum).
inline std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t crc_in = 0) {
    uLong crc = crc_in;
    // zlib takes uInt lengths; feed in chunks to stay within range.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

/// Appends little-endian encoded scalars to a byte buffer.
class ByteWriter {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const U bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }

    void put_bytes(std::span<const std::uint8_t> raw) { bytes_.insert(bytes_.end(), raw.begin(), raw.end()); }

    void put_string(const std::string& s) {
        put(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }

    std::size_t size() const noexcept { return bytes_.size(); }
    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

    /// CRC of everything written since `from`, appended as u32.
    void seal_section(std::size_t from) {
        const auto crc = crc32(std::span<const std::uint8_t>(bytes_).subspan(from));
        put(crc);
    }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked little-endian reader. Running past the end raises
/// TruncationError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        require(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        require(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string get_string() {
        const auto n = get<std::uint32_t>();
        auto raw = get_bytes(n);
        return {raw.begin(), raw.end()};
    }

    /// Reads the u32 CRC following a section that started at `from`.
    void check_section(std::size_t from, const char* name) {
        const auto computed = crc32(bytes_.subspan(from, pos_ - from));
        const auto stored = get<std::uint32_t>();
        if (computed != stored) {
            throw ChecksumError(std::string("checksum mismatch in section '") + name + "'");
        }
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void require(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw TruncationError("unexpected end of file");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Streaming counterpart of ByteWriter: bytes go to a sink in chunks, and
/// end_section() appends the CRC of everything since the previous section.
class SectionWriter {
public:
    using Sink = std::function<void(std::span<const std::uint8_t>)>;
    explicit SectionWriter(Sink sink) : sink_(std::move(sink)) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const U bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
        if (buf_.size() >= kChunk) {
            flush();
        }
    }

    void put_bytes(std::span<const std::uint8_t> raw) {
        buf_.insert(buf_.end(), raw.begin(), raw.end());
        if (buf_.size() >= kChunk) {
            flush();
        }
    }

    void end_section() {
        flush();
        const std::uint32_t crc = crc_;
        put(crc);
        flush();
        crc_ = 0;
    }

    /// Emits any buffered bytes; the section CRC keeps running.
    void flush() {
        if (!buf_.empty()) {
            crc_ = crc32(buf_, crc_);
            sink_(buf_);
            written_ += buf_.size();
            buf_.clear();
        }
    }

    std::uint64_t written() const noexcept { return written_ + buf_.size(); }

private:
    static constexpr std::size_t kChunk = 1 << 20;
    Sink sink_;
    std::vector<std::uint8_t> buf_;
    std::uint32_t crc_ = 0;
    std::uint64_t written_ = 0;
};

/// Streaming counterpart of ByteReader. The source fills a buffer and
/// returns the number of bytes produced (0 at end of input).
class SectionReader {
public:
    using Source = std::function<std::size_t(std::span<std::uint8_t>)>;
    explicit SectionReader(Source source) : source_(std::move(source)), buf_(kChunk) {}

    /// Reader over an in-memory buffer.
    static SectionReader over(std::span<const std::uint8_t> bytes) {
        auto pos = std::make_shared<std::size_t>(0);
        return SectionReader([bytes, pos](std::span<std::uint8_t> out) {
            const std::size_t n = std::min(out.size(), bytes.size() - *pos);
            std::memcpy(out.data(), bytes.data() + *pos, n);
            *pos += n;
            return n;
        });
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        require(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<U>(static_cast<U>(buf_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    void get_bytes(std::span<std::uint8_t> out) {
        std::size_t done = 0;
        while (done < out.size()) {
            require(1);
            const std::size_t n = std::min(out.size() - done, end_ - pos_);
            std::memcpy(out.data() + done, buf_.data() + pos_, n);
            pos_ += n;
            done += n;
        }
    }

    /// Reads the stored CRC and compares it with the bytes consumed since
    /// the previous section boundary.
    void end_section(const char* name) {
        fold_crc();
        const std::uint32_t computed = crc_;
        const auto stored = get<std::uint32_t>();
        fold_crc();
        crc_ = 0;
        if (computed != stored) {
            throw ChecksumError(std::string("checksum mismatch in section '") + name + "'");
        }
    }

    std::uint64_t position() const noexcept { return consumed_before_ + pos_; }

private:
    static constexpr std::size_t kChunk = 1 << 20;

    void fold_crc() {
        crc_ = crc32(std::span<const std::uint8_t>(buf_).subspan(crc_from_, pos_ - crc_from_), crc_);
        crc_from_ = pos_;
    }

    void require(std::size_t n) {
        if (end_ - pos_ >= n) {
            return;
        }
        fold_crc();
        const std::size_t keep = end_ - pos_;
        std::memmove(buf_.data(), buf_.data() + pos_, keep);
        consumed_before_ += pos_;
        pos_ = 0;
        crc_from_ = 0;
        end_ = keep;
        while (end_ < n) {
            const std::size_t got = source_(std::span<std::uint8_t>(buf_).subspan(end_));
            if (got == 0) {
                throw TruncationError("unexpected end of file");
            }
            end_ += got;
        }
        while (end_ < buf_.size()) {
            const std::size_t got = source_(std::span<std::uint8_t>(buf_).subspan(end_));
            if (got == 0) {
                break;
            }
            end_ += got;
        }
    }

    Source source_;
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::size_t crc_from_ = 0;
    std::uint32_t crc_ = 0;
    std::uint64_t consumed_before_ = 0;
};

/// Tagged, length-prefixed, CRC-sealed section:
///   u32 tag | u64 payload_length | payload | u32 crc32(tag..payload)
inline void write_section(ByteWriter& out, std::uint32_t tag, const ByteWriter& payload) {
    const std::size_t start = out.size();
    out.put(tag);
    out.put(static_cast<std::uint64_t>(payload.size()));
    out.put_bytes(payload.bytes());
    out.seal_section(start);
}

/// Reads the next section, checking its tag, bounds and CRC, and returns its payload.
inline std::span<const std::uint8_t> read_section(ByteReader& in, std::uint32_t tag, const char* name) {
    const std::size_t start = in.position();
    const auto found = in.get<std::uint32_t>();
    const auto length = in.get<std::uint64_t>();
    if (length > in.remaining() || in.remaining() - length < 4) {
        throw TruncationError(std::string("section '") + name + "' runs past end of file");
    }
    auto payload = in.get_bytes(static_cast<std::size_t>(length));
    in.check_section(start, name);
    if (found != tag) {
        throw FormatVersionError(std::string("expected section '") + name + "'");
    }
    return payload;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw FileError("cannot open '" + path + "' for reading");
    }
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) {
        throw FileError("read failed for '" + path + "'");
    }
    return bytes;
}

/// Writes through `produce` into `path.tmp`, then renames over `path`, so
/// readers never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::function<void(std::ofstream&)>& produce) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FileError("cannot open '" + tmp + "' for writing");
        }
        produce(out);
        out.flush();
        if (!out) {
            throw FileError("write failed for '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw FileError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    write_file_atomic(path, [&](std::ofstream& out) {
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    });
}

} // namespace csifp::io
