#include "slidar/speaker_embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace slidar {

std::vector<int> single_speaker_frames(const WindowAnnotation &annotation, int tag,
                                       double frame_step) {
    if (frame_step <= 0.0) throw std::invalid_argument("frame_step must be positive");
    const int frames =
        static_cast<int>(std::ceil(annotation.window_length / frame_step - 1e-9));
    const int num_tags = annotation.num_local_speakers();

    // active tag count per frame, evaluated at the frame start point
    std::vector<int> count(frames, 0);
    std::vector<uint8_t> mine(frames, 0);
    std::vector<std::vector<uint8_t>> seen(num_tags, std::vector<uint8_t>(frames, 0));
    for (const auto &entry : annotation.entries) {
        double on = annotation.effective_onset(entry) - annotation.window_onset;
        double off = annotation.effective_offset(entry) - annotation.window_onset;
        int first = static_cast<int>(std::ceil(on / frame_step - 1e-9));
        int last = static_cast<int>(std::ceil(off / frame_step - 1e-9));
        for (int f = std::max(first, 0); f < std::min(last, frames); ++f) {
            if (!seen[entry.local_tag][f]) {
                seen[entry.local_tag][f] = 1;
                ++count[f];
            }
            if (entry.local_tag == tag) mine[f] = 1;
        }
    }

    std::vector<int> support;
    for (int f = 0; f < frames; ++f)
        if (mine[f] && count[f] == 1) support.push_back(f);
    return support;
}

Vec time_average(const std::vector<Vec> &frames, const std::vector<int> &support) {
    if (support.empty()) throw std::runtime_error("no single-speaker support");
    Vec sum(frames.at(support.front()).size(), 0.0);
    for (int f : support) {
        const Vec &h = frames.at(f);
        if (h.size() != sum.size()) throw std::invalid_argument("inconsistent frame dimension");
        for (size_t d = 0; d < sum.size(); ++d) sum[d] += h[d];
    }
    for (double &v : sum) v /= static_cast<double>(support.size());
    return sum;
}

Vec residual_embedding(const WindowAnnotation &annotation, int tag,
                       const std::vector<Vec> &frames, double frame_step,
                       const std::map<int, Vec> &known) {
    if (frame_step <= 0.0) throw std::invalid_argument("frame_step must be positive");
    const int num_frames = static_cast<int>(frames.size());
    const int num_tags = annotation.num_local_speakers();

    std::vector<std::vector<uint8_t>> active(num_tags,
                                             std::vector<uint8_t>(num_frames, 0));
    for (const auto &entry : annotation.entries) {
        double on = annotation.effective_onset(entry) - annotation.window_onset;
        double off = annotation.effective_offset(entry) - annotation.window_onset;
        int first = static_cast<int>(std::ceil(on / frame_step - 1e-9));
        int last = static_cast<int>(std::ceil(off / frame_step - 1e-9));
        for (int f = std::max(first, 0); f < std::min(last, num_frames); ++f)
            active[entry.local_tag][f] = 1;
    }

    Vec sum;
    int used = 0;
    for (int f = 0; f < num_frames; ++f) {
        if (!active[tag][f]) continue;
        int k = 0;
        bool usable = true;
        for (int t = 0; t < num_tags && usable; ++t) {
            if (!active[t][f]) continue;
            ++k;
            if (t != tag && !known.count(t)) usable = false;
        }
        if (!usable) continue;
        const Vec &h = frames[f];
        if (sum.empty()) sum.assign(h.size(), 0.0);
        for (size_t d = 0; d < sum.size(); ++d) {
            double v = k * h[d];
            for (int t = 0; t < num_tags; ++t)
                if (t != tag && active[t][f]) v -= known.at(t)[d];
            sum[d] += v;
        }
        ++used;
    }
    if (used == 0) return {};
    for (double &v : sum) v /= static_cast<double>(used);
    return sum;
}

int SpeakerDictionary::index_of(const std::string &name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::runtime_error("unknown speaker: " + name);
    return static_cast<int>(it - names.begin());
}

namespace {

// log softmax over logits(k) = -scale * ||e - dict[k]||^2
void entry_loss(const Vec &e, int target, const SpeakerDictionary &dict, double &loss,
                Vec *d_e, double *d_scale) {
    const size_t K = dict.embeddings.size();
    std::vector<double> sq(K), logits(K);
    double max_logit = -1e300;
    for (size_t k = 0; k < K; ++k) {
        sq[k] = squared_distance(e, dict.embeddings[k]);
        logits[k] = -dict.scale * sq[k];
        max_logit = std::max(max_logit, logits[k]);
    }
    double z = 0.0;
    for (size_t k = 0; k < K; ++k) z += std::exp(logits[k] - max_logit);
    double lse = max_logit + std::log(z);
    loss += lse - logits[target];

    if (d_e || d_scale) {
        for (size_t k = 0; k < K; ++k) {
            double p = std::exp(logits[k] - lse);
            double coeff = p - (static_cast<int>(k) == target ? 1.0 : 0.0);
            if (d_e)
                for (size_t d = 0; d < e.size(); ++d)
                    (*d_e)[d] += coeff * (-dict.scale) * 2.0 * (e[d] - dict.embeddings[k][d]);
            if (d_scale) *d_scale += coeff * (-sq[k]);
        }
    }
}

} // namespace

double speaker_loss(const std::vector<Vec> &local_embeddings,
                    const std::vector<std::string> &targets, const SpeakerDictionary &dict) {
    if (local_embeddings.empty()) throw std::invalid_argument("no local speakers");
    if (local_embeddings.size() != targets.size())
        throw std::invalid_argument("embedding/target count mismatch");
    double loss = 0.0;
    for (size_t s = 0; s < local_embeddings.size(); ++s)
        entry_loss(local_embeddings[s], dict.index_of(targets[s]), dict, loss, nullptr, nullptr);
    return loss / static_cast<double>(local_embeddings.size());
}

SpeakerLossGradient speaker_loss_with_grad(const std::vector<Vec> &local_embeddings,
                                           const std::vector<std::string> &targets,
                                           const SpeakerDictionary &dict) {
    if (local_embeddings.empty()) throw std::invalid_argument("no local speakers");
    if (local_embeddings.size() != targets.size())
        throw std::invalid_argument("embedding/target count mismatch");
    SpeakerLossGradient g;
    g.d_embeddings.resize(local_embeddings.size());
    const double inv_n = 1.0 / static_cast<double>(local_embeddings.size());
    for (size_t s = 0; s < local_embeddings.size(); ++s) {
        g.d_embeddings[s].assign(local_embeddings[s].size(), 0.0);
        entry_loss(local_embeddings[s], dict.index_of(targets[s]), dict, g.loss,
                   &g.d_embeddings[s], &g.d_scale);
    }
    g.loss *= inv_n;
    g.d_scale *= inv_n;
    for (auto &de : g.d_embeddings)
        for (double &v : de) v *= inv_n;
    return g;
}

void write_embeddings(std::ostream &out, const std::vector<LocalSpeakerEmbedding> &embeddings) {
    for (const auto &e : embeddings) {
        out << e.window_index << ' ' << e.local_tag << ' ' << e.vector.size() << ' '
            << e.support << '\n';
        for (double v : e.vector) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, sizeof(bits));
            char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff),
                             static_cast<char>((bits >> 24) & 0xff)};
            out.write(bytes, 4);
        }
        out << '\n';
    }
}

std::vector<LocalSpeakerEmbedding> read_embeddings(std::istream &in) {
    std::vector<LocalSpeakerEmbedding> out;
    std::string header;
    while (std::getline(in, header)) {
        if (header.empty()) continue;
        std::istringstream hs(header);
        LocalSpeakerEmbedding e;
        size_t dim = 0;
        if (!(hs >> e.window_index >> e.local_tag >> dim >> e.support))
            throw std::runtime_error("malformed embedding header: " + header);
        e.vector.resize(dim);
        for (size_t d = 0; d < dim; ++d) {
            char bytes[4];
            in.read(bytes, 4);
            if (!in) throw std::runtime_error("truncated embedding payload");
            uint32_t bits = (static_cast<uint32_t>(static_cast<unsigned char>(bytes[0]))) |
                            (static_cast<uint32_t>(static_cast<unsigned char>(bytes[1])) << 8) |
                            (static_cast<uint32_t>(static_cast<unsigned char>(bytes[2])) << 16) |
                            (static_cast<uint32_t>(static_cast<unsigned char>(bytes[3])) << 24);
            float f;
            std::memcpy(&f, &bits, sizeof(f));
            e.vector[d] = f;
        }
        out.push_back(std::move(e));
    }
    return out;
}

double dot(const Vec &a, const Vec &b) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec &a) { return std::sqrt(dot(a, a)); }

double cosine_distance(const Vec &a, const Vec &b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot(a, b) / (na * nb);
}

double squared_distance(const Vec &a, const Vec &b) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace slidar
