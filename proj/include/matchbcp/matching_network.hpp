#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace matchbcp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bipartite matching network: L left classes (0..L-1), K right classes
// (L..L+K-1), J activities pairing one left with one right class. Immutable
// after construction; construction validates all structural invariants.
class MatchingNetwork {
public:
    MatchingNetwork(int L, int K, std::vector<std::pair<int, int>> activities,
                    Vec lambda, Vec v, Vec h, Vec a, Vec gamma,
                    std::string name = "")
        : L_(L), K_(K), I_(L + K), J_(static_cast<int>(activities.size())),
          activities_(std::move(activities)), lambda_(std::move(lambda)),
          v_(std::move(v)), h_(std::move(h)), a_(std::move(a)),
          gamma_(std::move(gamma)), name_(std::move(name)) {
        validate();
        incident_.assign(I_, {});
        for (int j = 0; j < J_; ++j) {
            incident_[activities_[j].first].push_back(j);
            incident_[activities_[j].second].push_back(j);
        }
    }

    int num_left() const { return L_; }
    int num_right() const { return K_; }
    int num_classes() const { return I_; }
    int num_activities() const { return J_; }
    int left_class(int j) const { return activities_[j].first; }
    int right_class(int j) const { return activities_[j].second; }
    const std::vector<std::pair<int, int>>& activities() const { return activities_; }
    const Vec& arrival_rates() const { return lambda_; }
    const Vec& match_values() const { return v_; }
    const Vec& holding_costs() const { return h_; }
    const Vec& abandonment_penalties() const { return a_; }
    const Vec& abandonment_rates() const { return gamma_; }
    const std::string& name() const { return name_; }
    // activities touching class i, ascending
    const std::vector<int>& incident(int i) const { return incident_[i]; }

private:
    void validate() const {
        if (L_ <= 0 || K_ <= 0) throw NetworkError("L and K must be positive");
        if (J_ <= 0) throw NetworkError("at least one activity required");
        auto check_len = [&](const Vec& x, int len, const char* what) {
            if (x.size() != len)
                throw NetworkError(std::string(what) + ": wrong length");
        };
        check_len(lambda_, I_, "lambda");
        check_len(v_, J_, "v");
        check_len(h_, I_, "h");
        check_len(a_, I_, "a");
        check_len(gamma_, I_, "gamma");
        if ((lambda_.array() <= 0.0).any())
            throw NetworkError("arrival rates must be strictly positive");
        if ((v_.array() <= 0.0).any())
            throw NetworkError("match values must be strictly positive");
        if ((h_.array() < 0.0).any() || (a_.array() < 0.0).any() ||
            (gamma_.array() < 0.0).any())
            throw NetworkError("h, a, gamma must be nonnegative");
        std::vector<bool> covered(I_, false);
        std::vector<std::vector<bool>> seen(L_, std::vector<bool>(K_, false));
        for (const auto& [l, r] : activities_) {
            if (l < 0 || l >= L_) throw NetworkError("left endpoint out of range");
            if (r < L_ || r >= I_) throw NetworkError("right endpoint out of range");
            if (seen[l][r - L_]) throw NetworkError("duplicate activity pair");
            seen[l][r - L_] = true;
            covered[l] = covered[r] = true;
        }
        for (int i = 0; i < I_; ++i)
            if (!covered[i])
                throw NetworkError("class " + std::to_string(i + 1) +
                                   " is not matched by any activity");
    }

    int L_, K_, I_, J_;
    std::vector<std::pair<int, int>> activities_;
    Vec lambda_, v_, h_, a_, gamma_;
    std::string name_;
    std::vector<std::vector<int>> incident_;
};

// Column j of R equals e_{l(j)} + e_{r(j)}.
inline Mat build_matching_matrix(const MatchingNetwork& net) {
    Mat R = Mat::Zero(net.num_classes(), net.num_activities());
    for (int j = 0; j < net.num_activities(); ++j) {
        R(net.left_class(j), j) = 1.0;
        R(net.right_class(j), j) = 1.0;
    }
    return R;
}

// c_i = h_i + gamma_i * a_i, the effective holding cost rate.
struct EffectiveCost {
    Vec c;
};

inline EffectiveCost effective_cost(const MatchingNetwork& net) {
    return {net.holding_costs().array() +
            net.abandonment_rates().array() * net.abandonment_penalties().array()};
}

}  // namespace matchbcp
