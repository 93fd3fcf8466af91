#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ldm/rng.hpp"
#include "ldm/sparse.hpp"

namespace ldm {

struct Rating {
    index_t user = 0;
    index_t item = 0;
    double value = 0.0;
    std::int64_t timestamp = 0;
};

enum class FileFormat {
    tab100k,  // user<TAB>item<TAB>rating<TAB>ts
    colon1m,  // user::item::rating::ts (1m and 10m files)
};

/// Dense internal ids with the original file ids kept for reports and dumps.
struct IdMap {
    std::vector<std::int64_t> to_original;
    std::unordered_map<std::int64_t, index_t> to_internal;

    index_t size() const { return static_cast<index_t>(to_original.size()); }
};

struct RatingDataset {
    std::vector<Rating> ratings;
    index_t user_count = 0;
    index_t item_count = 0;
    IdMap users;
    IdMap items;
    std::size_t duplicate_count = 0;  // last-wins collisions seen while loading

    /// Items that still carry at least one rating; Table-style statistics
    /// shrink this while item_count keeps dropped columns.
    index_t items_with_ratings() const {
        std::vector<char> seen(static_cast<std::size_t>(item_count), 0);
        index_t n = 0;
        for (const Rating& r : ratings) {
            char& s = seen[static_cast<std::size_t>(r.item)];
            if (!s) {
                s = 1;
                ++n;
            }
        }
        return n;
    }

    std::vector<index_t> ratings_per_user() const {
        std::vector<index_t> counts(static_cast<std::size_t>(user_count), 0);
        for (const Rating& r : ratings)
            ++counts[static_cast<std::size_t>(r.user)];
        return counts;
    }
};

struct SplitSpec {
    index_t n_train = 10;
    index_t min_test = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_train < 1) throw std::invalid_argument("split: n_train must be >= 1");
        if (min_test < 1) throw std::invalid_argument("split: min_test must be >= 1");
    }
};

namespace detail {

inline bool parse_int(std::string_view s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + sep.size();
    }
    return fields;
}

/// Dense 0-based ids assigned in ascending original-id order, so the mapping
/// is independent of file row order.
inline IdMap build_id_map(std::vector<std::int64_t> originals) {
    std::sort(originals.begin(), originals.end());
    originals.erase(std::unique(originals.begin(), originals.end()), originals.end());
    IdMap map;
    map.to_original = std::move(originals);
    map.to_internal.reserve(map.to_original.size());
    for (std::size_t i = 0; i < map.to_original.size(); ++i)
        map.to_internal.emplace(map.to_original[i], static_cast<index_t>(i));
    return map;
}

} // namespace detail

/// Parse a MovieLens ratings file. Duplicate (user, item) pairs keep the last
/// occurrence; the collision count is reported on the dataset.
inline RatingDataset load_movielens(const std::string& path, FileFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ingest: cannot open '" + path + "'");

    const std::string_view sep = format == FileFormat::tab100k ? "\t" : "::";

    struct RawRating {
        std::int64_t user, item;
        double value;
        std::int64_t timestamp;
    };
    std::vector<RawRating> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_fields(line, sep);
        if (fields.size() != 3 && fields.size() != 4)
            throw std::runtime_error("ingest: malformed line " + std::to_string(line_no) + " in '" + path + "'");
        RawRating r{};
        if (!detail::parse_int(fields[0], r.user) || !detail::parse_int(fields[1], r.item) ||
            !detail::parse_double(fields[2], r.value) || !std::isfinite(r.value))
            throw std::runtime_error("ingest: non-numeric field at line " + std::to_string(line_no) + " in '" + path + "'");
        r.timestamp = 0;
        if (fields.size() == 4 && !detail::parse_int(fields[3], r.timestamp))
            throw std::runtime_error("ingest: non-numeric timestamp at line " + std::to_string(line_no) + " in '" + path + "'");
        raw.push_back(r);
    }

    RatingDataset ds;
    {
        std::vector<std::int64_t> user_ids, item_ids;
        user_ids.reserve(raw.size());
        item_ids.reserve(raw.size());
        for (const RawRating& r : raw) {
            user_ids.push_back(r.user);
            item_ids.push_back(r.item);
        }
        ds.users = detail::build_id_map(std::move(user_ids));
        ds.items = detail::build_id_map(std::move(item_ids));
    }
    ds.user_count = ds.users.size();
    ds.item_count = ds.items.size();

    std::unordered_map<std::uint64_t, std::size_t> position;
    position.reserve(raw.size());
    ds.ratings.reserve(raw.size());
    for (const RawRating& r : raw) {
        Rating rating;
        rating.user = ds.users.to_internal.at(r.user);
        rating.item = ds.items.to_internal.at(r.item);
        rating.value = r.value;
        rating.timestamp = r.timestamp;
        std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(rating.user)) << 32) |
                            static_cast<std::uint32_t>(rating.item);
        auto [it, inserted] = position.emplace(key, ds.ratings.size());
        if (inserted) {
            ds.ratings.push_back(rating);
        } else {
            ds.ratings[it->second] = rating;  // keep last
            ++ds.duplicate_count;
        }
    }
    return ds;
}

/// Drop users with fewer than n_train + min_test ratings and re-densify user
/// ids. Items are not re-filtered: columns losing all ratings stay in
/// item_count and their systems are skipped downstream.
inline RatingDataset filter_min_ratings(const RatingDataset& ds, const SplitSpec& spec) {
    spec.validate();
    const index_t min_count = spec.n_train + spec.min_test;

    std::vector<index_t> counts(static_cast<std::size_t>(ds.user_count), 0);
    for (const Rating& r : ds.ratings)
        ++counts[static_cast<std::size_t>(r.user)];

    std::vector<index_t> remap(static_cast<std::size_t>(ds.user_count), -1);
    RatingDataset out;
    out.items = ds.items;
    out.item_count = ds.item_count;
    out.duplicate_count = ds.duplicate_count;
    for (index_t u = 0; u < ds.user_count; ++u) {
        if (counts[static_cast<std::size_t>(u)] >= min_count) {
            remap[static_cast<std::size_t>(u)] = out.users.size();
            out.users.to_original.push_back(ds.users.to_original[static_cast<std::size_t>(u)]);
        }
    }
    out.users.to_internal.reserve(out.users.to_original.size());
    for (std::size_t i = 0; i < out.users.to_original.size(); ++i)
        out.users.to_internal.emplace(out.users.to_original[i], static_cast<index_t>(i));
    out.user_count = out.users.size();

    out.ratings.reserve(ds.ratings.size());
    for (Rating r : ds.ratings) {
        index_t u = remap[static_cast<std::size_t>(r.user)];
        if (u < 0) continue;
        r.user = u;
        out.ratings.push_back(r);
    }
    return out;
}

/// Per-user random split: exactly n_train ratings per user to train, the rest
/// to test. Draws are keyed on (seed, internal user id) over the user's
/// item-sorted rating list, so membership is independent of file order.
inline std::pair<RatingDataset, RatingDataset> split_per_user(const RatingDataset& ds, const SplitSpec& spec) {
    spec.validate();

    std::vector<std::vector<std::size_t>> per_user(static_cast<std::size_t>(ds.user_count));
    for (std::size_t i = 0; i < ds.ratings.size(); ++i)
        per_user[static_cast<std::size_t>(ds.ratings[i].user)].push_back(i);

    RatingDataset train, test;
    for (RatingDataset* part : {&train, &test}) {
        part->user_count = ds.user_count;
        part->item_count = ds.item_count;
        part->users = ds.users;
        part->items = ds.items;
    }
    train.ratings.reserve(static_cast<std::size_t>(ds.user_count) * static_cast<std::size_t>(spec.n_train));
    test.ratings.reserve(ds.ratings.size());

    for (index_t u = 0; u < ds.user_count; ++u) {
        auto& idx = per_user[static_cast<std::size_t>(u)];
        if (static_cast<index_t>(idx.size()) < spec.n_train)
            throw std::runtime_error("split: user " + std::to_string(u) + " has fewer than n_train ratings (filter skipped?)");
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return ds.ratings[a].item < ds.ratings[b].item;
        });
        SplitMix64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(u)));
        const std::size_t take = static_cast<std::size_t>(spec.n_train);
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = i + rng.next_below(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < take ? train : test).ratings.push_back(ds.ratings[idx[i]]);
    }
    return {std::move(train), std::move(test)};
}

enum class Orientation { user_rows, item_rows };

inline SparseMatrix to_csr(const RatingDataset& ds, Orientation orientation) {
    std::vector<Triplet> triplets;
    triplets.reserve(ds.ratings.size());
    for (const Rating& r : ds.ratings) {
        if (orientation == Orientation::user_rows)
            triplets.push_back({r.user, r.item, r.value});
        else
            triplets.push_back({r.item, r.user, r.value});
    }
    index_t rows = orientation == Orientation::user_rows ? ds.user_count : ds.item_count;
    index_t cols = orientation == Orientation::user_rows ? ds.item_count : ds.user_count;
    return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

/// CSV manifest `user_id,item_id,split` with original file ids, for exact
/// split reproduction across runs.
inline void write_split_manifest(const std::string& path, const RatingDataset& train, const RatingDataset& test) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ingest: cannot write '" + path + "'");
    out << "user_id,item_id,split\n";
    for (const RatingDataset* part : {&train, &test}) {
        const char* tag = part == &train ? "train" : "test";
        for (const Rating& r : part->ratings)
            out << part->users.to_original[static_cast<std::size_t>(r.user)] << ','
                << part->items.to_original[static_cast<std::size_t>(r.item)] << ',' << tag << "\n";
    }
}

/// Full-dataset shape of the known MovieLens releases. No authoritative
/// digest ships with this repo, so the check validates exact counts and
/// points at the upstream download on mismatch.
inline std::optional<std::string> verify_known_dataset(const RatingDataset& ds, FileFormat format) {
    struct Known {
        const char* name;
        FileFormat format;
        index_t users, items;
        std::size_t ratings;
    };
    static const Known known[] = {
        {"MovieLens-100k", FileFormat::tab100k, 943, 1682, 100000},
        {"MovieLens-1m", FileFormat::colon1m, 6040, 3706, 1000209},
        {"MovieLens-10m", FileFormat::colon1m, 69878, 10677, 10000054},
    };
    const Known* closest = nullptr;
    for (const Known& k : known) {
        if (k.format != format) continue;
        if (ds.user_count == k.users && ds.item_count == k.items && ds.ratings.size() == k.ratings)
            return std::nullopt;  // exact match, nothing to report
        if (!closest || std::llabs(static_cast<long long>(ds.ratings.size()) - static_cast<long long>(k.ratings)) <
                            std::llabs(static_cast<long long>(ds.ratings.size()) - static_cast<long long>(closest->ratings)))
            closest = &k;
    }
    if (!closest) return std::nullopt;
    return "dataset does not match " + std::string(closest->name) + " (expected " +
           std::to_string(closest->users) + " users / " + std::to_string(closest->items) + " items / " +
           std::to_string(closest->ratings) + " ratings, got " + std::to_string(ds.user_count) + " / " +
           std::to_string(ds.item_count) + " / " + std::to_string(ds.ratings.size()) +
           "); official copies: https://grouplens.org/datasets/movielens/";
}

} // namespace ldm
