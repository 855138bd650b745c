#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace phasecast {

/// Fixed-size dynamic bitset tuned for reachability sets: cheap unions,
/// intersections-with-complement, and popcounts over 64-bit words.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t nbits)
        : nbits_(nbits), words_((nbits + 63) / 64, 0ULL) {}

    std::size_t size() const { return nbits_; }
    std::size_t word_count() const { return words_.size(); }
    const std::uint64_t* data() const { return words_.data(); }
    std::uint64_t* data() { return words_.data(); }

    bool test(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1ULL;
    }
    void set(std::size_t i) { words_[i >> 6] |= 1ULL << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(1ULL << (i & 63)); }
    void clear() { std::fill(words_.begin(), words_.end(), 0ULL); }

    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) c += std::popcount(w);
        return c;
    }

    bool any() const {
        for (std::uint64_t w : words_)
            if (w) return true;
        return false;
    }

    void or_with(const Bitset& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    }

    void or_with(std::span<const std::uint64_t> other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other[i];
    }

    /// |this \ other| without materializing the difference.
    std::size_t and_not_count(const Bitset& other) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += std::popcount(words_[i] & ~other.words_[i]);
        return c;
    }

    /// True iff this is a subset of other.
    bool subset_of(const Bitset& other) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~other.words_[i]) return false;
        return true;
    }

    bool operator==(const Bitset& other) const {
        return nbits_ == other.nbits_ && words_ == other.words_;
    }

    template <typename Fn>
    void for_each_set(Fn&& fn) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi];
            while (w) {
                unsigned b = std::countr_zero(w);
                fn(static_cast<std::size_t>(wi * 64 + b));
                w &= w - 1;
            }
        }
    }

    std::vector<std::int32_t> to_indices() const {
        std::vector<std::int32_t> out;
        out.reserve(count());
        for_each_set([&](std::size_t i) { out.push_back(static_cast<std::int32_t>(i)); });
        return out;
    }

    std::size_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::uint64_t w : words_) {
            h ^= w;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }

    /// Lexicographic word order; gives bitset-keyed maps a stable iteration order.
    bool operator<(const Bitset& other) const { return words_ < other.words_; }

private:
    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

struct BitsetHash {
    std::size_t operator()(const Bitset& b) const { return b.hash(); }
};

// Raw-word helpers for flat bitset pools (one allocation for many sets).
inline std::size_t words_for_bits(std::size_t nbits) { return (nbits + 63) / 64; }

inline std::size_t andnot_count_words(const std::uint64_t* a, const std::uint64_t* b,
                                      std::size_t nwords) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < nwords; ++i) c += std::popcount(a[i] & ~b[i]);
    return c;
}

inline void or_words(std::uint64_t* dst, const std::uint64_t* src, std::size_t nwords) {
    for (std::size_t i = 0; i < nwords; ++i) dst[i] |= src[i];
}

}  // namespace phasecast
