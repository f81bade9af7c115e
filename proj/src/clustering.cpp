#include "slidar/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace slidar {

void add_cannot_link(CannotLinkSet &set, EmbeddingId a, EmbeddingId b) {
    if (a == b) return;
    if (b < a) std::swap(a, b);
    set.insert({a, b});
}

namespace {

// absolute frame indices of single-speaker activity clipped to [on, off)
std::vector<int64_t> clipped_support(const WindowAnnotation &ann, int tag, double on,
                                     double off, double frame_step) {
    std::vector<int64_t> out;
    for (int f : single_speaker_frames(ann, tag, frame_step)) {
        double t = ann.window_onset + f * frame_step;
        if (t >= on - 1e-9 && t < off - 1e-9)
            out.push_back(std::llround(t / frame_step));
    }
    return out;
}

std::vector<int> tags_in(const WindowAnnotation &ann) {
    std::vector<int> tags;
    for (const auto &e : ann.entries)
        if (std::find(tags.begin(), tags.end(), e.local_tag) == tags.end())
            tags.push_back(e.local_tag);
    std::sort(tags.begin(), tags.end());
    return tags;
}

} // namespace

bool disjoint_activity_policy(const WindowAnnotation &earlier, int tag_a,
                              const WindowAnnotation &later, int tag_b, double shared_onset,
                              double shared_offset, double frame_step) {
    auto a = clipped_support(earlier, tag_a, shared_onset, shared_offset, frame_step);
    auto b = clipped_support(later, tag_b, shared_onset, shared_offset, frame_step);
    if (a.empty() || b.empty()) return false;
    std::vector<int64_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both.empty();
}

CannotLinkSet derive_constraints(const std::vector<LocalDastResult> &results,
                                 const ClusteringConfig &cfg, double frame_step,
                                 const CrossWindowPolicy &policy) {
    CannotLinkSet set;
    for (const auto &r : results) {
        auto tags = tags_in(r.annotation);
        for (size_t i = 0; i < tags.size(); ++i)
            for (size_t j = i + 1; j < tags.size(); ++j)
                add_cannot_link(set, {r.window.index, tags[i]}, {r.window.index, tags[j]});
    }
    for (size_t i = 0; i + 1 < results.size(); ++i) {
        const auto &w1 = results[i];
        const auto &w2 = results[i + 1];
        double shared_onset = w2.window.onset;
        double shared_offset = w1.window.end();
        if (shared_offset - shared_onset <= cfg.min_constraint_overlap) continue;
        for (int tag_a : tags_in(w1.annotation))
            for (int tag_b : tags_in(w2.annotation))
                if (policy(w1.annotation, tag_a, w2.annotation, tag_b, shared_onset,
                           shared_offset, frame_step))
                    add_cannot_link(set, {w1.window.index, tag_a}, {w2.window.index, tag_b});
    }
    return set;
}

ClusteringResult constrained_ahc(const std::vector<LocalSpeakerEmbedding> &embeddings,
                                 const CannotLinkSet &constraints, const ClusteringConfig &cfg) {
    const size_t n = embeddings.size();
    if (n == 0) throw std::invalid_argument("no embeddings to cluster");

    std::map<EmbeddingId, size_t> index_of;
    for (size_t i = 0; i < n; ++i)
        index_of[{embeddings[i].window_index, embeddings[i].local_tag}] = i;

    // symmetric matrices over live cluster slots
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<uint8_t>> forbidden(n, std::vector<uint8_t>(n, 0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = cosine_distance(embeddings[i].vector, embeddings[j].vector);
    for (const auto &[a, b] : constraints) {
        auto ia = index_of.find(a);
        auto ib = index_of.find(b);
        if (ia == index_of.end() || ib == index_of.end()) continue;
        forbidden[ia->second][ib->second] = forbidden[ib->second][ia->second] = 1;
    }

    std::vector<uint8_t> live(n, 1);
    std::vector<int> size(n, 1);
    std::vector<int> min_member(n);
    std::vector<std::vector<size_t>> members(n);
    for (size_t i = 0; i < n; ++i) {
        min_member[i] = static_cast<int>(i);
        members[i] = {i};
    }

    ClusteringResult result;
    int clusters = static_cast<int>(n);
    while (clusters > 1) {
        if (cfg.target_clusters > 0 && clusters <= cfg.target_clusters) break;

        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (size_t i = 0; i < n; ++i) {
            if (!live[i]) continue;
            for (size_t j = i + 1; j < n; ++j) {
                if (!live[j] || forbidden[i][j]) continue;
                double d = dist[i][j];
                int lo = std::min(min_member[i], min_member[j]);
                int hi = std::max(min_member[i], min_member[j]);
                int blo = bi < 0 ? 0 : std::min(min_member[bi], min_member[bj]);
                int bhi = bi < 0 ? 0 : std::max(min_member[bi], min_member[bj]);
                if (d < best || (d == best && std::tie(lo, hi) < std::tie(blo, bhi))) {
                    best = d;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        }
        if (bi < 0) { // constraints forbid every remaining merge
            if (cfg.target_clusters > 0) result.constraint_limited = true;
            break;
        }
        if (cfg.target_clusters == 0 && best > cfg.distance_threshold) break;

        // merge bj into bi
        for (size_t k = 0; k < n; ++k) {
            if (!live[k] || static_cast<int>(k) == bi || static_cast<int>(k) == bj) continue;
            double d;
            if (cfg.linkage == Linkage::Average)
                d = (size[bi] * dist[bi][k] + size[bj] * dist[bj][k]) /
                    static_cast<double>(size[bi] + size[bj]);
            else
                d = std::max(dist[bi][k], dist[bj][k]);
            dist[bi][k] = dist[k][bi] = d;
            forbidden[bi][k] = forbidden[k][bi] =
                forbidden[bi][k] || forbidden[bj][k];
        }
        size[bi] += size[bj];
        min_member[bi] = std::min(min_member[bi], min_member[bj]);
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        live[bj] = 0;
        --clusters;
    }

    // dense global ids ordered by earliest activity time
    struct Slot {
        double earliest;
        int min_member;
        size_t slot;
    };
    std::vector<Slot> order;
    for (size_t i = 0; i < n; ++i) {
        if (!live[i]) continue;
        double earliest = std::numeric_limits<double>::infinity();
        for (size_t m : members[i])
            earliest = std::min(earliest, embeddings[m].activity_onset);
        order.push_back({earliest, min_member[i], i});
    }
    std::sort(order.begin(), order.end(), [](const Slot &a, const Slot &b) {
        return std::tie(a.earliest, a.min_member) < std::tie(b.earliest, b.min_member);
    });
    result.num_clusters = static_cast<int>(order.size());
    for (size_t id = 0; id < order.size(); ++id)
        for (size_t m : members[order[id].slot])
            result.labels[{embeddings[m].window_index, embeddings[m].local_tag}] =
                static_cast<int>(id);
    return result;
}

void relabel(std::vector<LocalDastResult> &results, const ClusteringResult &clustering) {
    // direct labels first
    for (auto &r : results)
        for (auto &entry : r.annotation.entries) {
            auto it = clustering.labels.find({r.window.index, entry.local_tag});
            entry.global_id = it != clustering.labels.end() ? it->second : -1;
        }

    // cluster means, for matching residual embeddings of unsupported tags
    std::map<int, Vec> mean;
    std::map<int, int> mean_n;
    for (const auto &r : results)
        for (const auto &e : r.embeddings) {
            auto it = clustering.labels.find({e.window_index, e.local_tag});
            if (it == clustering.labels.end()) continue;
            Vec &m = mean[it->second];
            if (m.empty()) m.assign(e.vector.size(), 0.0);
            for (size_t d = 0; d < m.size(); ++d) m[d] += e.vector[d];
            ++mean_n[it->second];
        }
    for (auto &[label, m] : mean)
        for (double &v : m) v /= mean_n[label];

    // Tags without any embedding support. Two tags in one window are
    // different people by construction, so labels already present in the
    // window are never eligible. Preference order: nearest cluster mean of
    // the tag's overlap-residual embedding, then the same tag's nearest
    // supported window occurrence, then a fresh id.
    int next_fresh = clustering.num_clusters;
    for (auto &r : results) {
        std::set<int> tags;
        for (const auto &entry : r.annotation.entries)
            if (entry.global_id < 0) tags.insert(entry.local_tag);
        for (int tag : tags) {
            std::set<int> used;
            for (const auto &entry : r.annotation.entries)
                if (entry.local_tag != tag && entry.global_id >= 0)
                    used.insert(entry.global_id);

            int label = -1;
            const Vec *residual = nullptr;
            for (const auto &e : r.residual_embeddings)
                if (e.local_tag == tag) residual = &e.vector;
            if (residual) {
                double best = std::numeric_limits<double>::max();
                for (const auto &[candidate, m] : mean) {
                    if (used.count(candidate) || m.size() != residual->size()) continue;
                    double d = cosine_distance(*residual, m);
                    if (d < best) {
                        best = d;
                        label = candidate;
                    }
                }
            }
            if (label < 0) {
                int best_dist = std::numeric_limits<int>::max();
                for (const auto &[key, value] : clustering.labels) {
                    if (key.second != tag || used.count(value)) continue;
                    int d = std::abs(key.first - r.window.index);
                    if (d < best_dist) {
                        best_dist = d;
                        label = value;
                    }
                }
            }
            if (label < 0) label = next_fresh++;
            for (auto &entry : r.annotation.entries)
                if (entry.local_tag == tag) entry.global_id = label;
        }
    }
}

} // namespace slidar
