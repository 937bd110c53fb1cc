// Shared classifier plumbing: the training-set container, per-feature
// standardization, hyperparameters, and the base64 helpers used by model
// serialization.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace spcd {

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> x;
    std::vector<int> y;                // binary labels, 0 or 1
    std::vector<std::string> ids;      // patch ids; may be empty
    std::vector<std::string> groups;   // source-image ids; may be empty

    std::size_t size() const { return x.size(); }
    std::size_t dim() const { return feature_names.size(); }

    void validate() const {
        if (x.empty()) throw std::invalid_argument("dataset: no rows");
        if (y.size() != x.size()) throw std::invalid_argument("dataset: label count mismatch");
        if (!ids.empty() && ids.size() != x.size())
            throw std::invalid_argument("dataset: id count mismatch");
        if (!groups.empty() && groups.size() != x.size())
            throw std::invalid_argument("dataset: group count mismatch");
        for (const auto& row : x)
            if (row.size() != feature_names.size())
                throw std::invalid_argument("dataset: row width mismatch");
        for (int v : y)
            if (v != 0 && v != 1) throw std::invalid_argument("dataset: labels must be 0/1");
    }
};

// Per-feature zero-mean unit-variance scaling, fitted on training rows only.
// Constant features are centered and left unscaled.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // multiplicative, 1/std

    static Standardizer fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw std::invalid_argument("standardizer: no rows");
        std::size_t d = rows[0].size();
        Standardizer s;
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
        for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(rows.size());
        std::vector<double> var(d, 0.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < d; ++j) {
                double dxj = r[j] - s.mean[j];
                var[j] += dxj * dxj;
            }
        for (std::size_t j = 0; j < d; ++j) {
            double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
            if (sd > 1e-12) s.scale[j] = 1.0 / sd;
        }
        return s;
    }

    std::vector<double> apply(const std::vector<double>& row) const {
        if (row.size() != mean.size()) throw std::invalid_argument("standardizer: width mismatch");
        std::vector<double> out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) * scale[j];
        return out;
    }
};

enum class ModelKind { naive_bayes, random_forest, mlp };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::naive_bayes: return "naive_bayes";
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::mlp: return "mlp";
    }
    return "unknown";
}

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "naive_bayes" || s == "nb") return ModelKind::naive_bayes;
    if (s == "random_forest" || s == "rf") return ModelKind::random_forest;
    if (s == "mlp") return ModelKind::mlp;
    throw std::invalid_argument("unknown model kind: " + s);
}

struct ModelParams {
    ModelKind kind = ModelKind::naive_bayes;
    std::uint64_t seed = 0;

    double nb_var_floor = 1e-9;

    int rf_trees = 100;
    int rf_max_depth = 0;  // 0 = grow until pure
    int rf_min_leaf = 1;

    int mlp_hidden = 64;
    double mlp_lr = 1e-3;
    int mlp_epochs = 200;
    int mlp_batch = 32;
    double mlp_l2 = 1e-4;

    void validate() const {
        if (nb_var_floor <= 0) throw std::invalid_argument("nb_var_floor must be positive");
        if (rf_trees < 1) throw std::invalid_argument("rf_trees must be >= 1");
        if (rf_max_depth < 0) throw std::invalid_argument("rf_max_depth must be >= 0");
        if (rf_min_leaf < 1) throw std::invalid_argument("rf_min_leaf must be >= 1");
        if (mlp_hidden < 1) throw std::invalid_argument("mlp_hidden must be >= 1");
        if (!(mlp_lr > 0)) throw std::invalid_argument("mlp_lr must be positive");
        if (mlp_epochs < 1) throw std::invalid_argument("mlp_epochs must be >= 1");
        if (mlp_batch < 1) throw std::invalid_argument("mlp_batch must be >= 1");
        if (mlp_l2 < 0) throw std::invalid_argument("mlp_l2 must be >= 0");
    }
};

// Optimizer blow-ups surface as this instead of a generic runtime_error so
// callers can map them to a distinct exit code.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainTrace {
    std::vector<double> epoch_losses;  // MLP only; mean batch loss per epoch
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

inline const char* b64_alphabet() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const unsigned char* data, std::size_t n) {
    const char* tab = b64_alphabet();
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= n; i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out.push_back(tab[v & 63]);
    }
    if (i + 1 == n) {
        std::uint32_t v = data[i] << 16;
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == n) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(tab[(v >> 18) & 63]);
        out.push_back(tab[(v >> 12) & 63]);
        out.push_back(tab[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& s) {
    if (s.size() % 4 != 0) throw std::runtime_error("base64: length not a multiple of 4");
    int rev[256];
    for (int& v : rev) v = -1;
    const char* tab = b64_alphabet();
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(tab[i])] = i;
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (int j = 0; j < 4; ++j) {
            char c = s[i + j];
            if (c == '=') {
                if (i + 4 != s.size() || j < 2) throw std::runtime_error("base64: bad padding");
                ++pad;
                v <<= 6;
            } else {
                if (pad > 0 || rev[static_cast<unsigned char>(c)] < 0)
                    throw std::runtime_error("base64: bad character");
                v = (v << 6) | static_cast<std::uint32_t>(rev[static_cast<unsigned char>(c)]);
            }
        }
        out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
    }
    return out;
}

inline std::string encode_doubles(const std::vector<double>& v) {
    return base64_encode(reinterpret_cast<const unsigned char*>(v.data()),
                         v.size() * sizeof(double));
}

inline std::vector<double> decode_doubles(const std::string& s) {
    std::vector<unsigned char> bytes = base64_decode(s);
    if (bytes.size() % sizeof(double) != 0)
        throw std::runtime_error("model blob: byte count not a multiple of 8");
    std::vector<double> v(bytes.size() / sizeof(double));
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
}

}  // namespace detail

}  // namespace spcd
