#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "mcz/common.hpp"
#include "mcz/errors.hpp"

namespace mcz {

struct Atom {
    Point x;
    double weight = 0.0;
};

/// Finite linear combination of point masses sum_j a_j delta_{x_j}.
/// Duplicate points are allowed; weights add for evaluation purposes.
class AtomicMeasure {
public:
    AtomicMeasure() = default;
    explicit AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.weight)) throw config_error("AtomicMeasure: weights must be finite");
            for (double c : a.x)
                if (!std::isfinite(c)) throw config_error("AtomicMeasure: atom points must be finite");
        }
    }

    static AtomicMeasure dirac(Point x, double weight = 1.0) { return AtomicMeasure({Atom{std::move(x), weight}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    double total_variation() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += std::fabs(a.weight);
        return s;
    }

    AtomicMeasure scaled(double c) const {
        auto atoms = atoms_;
        for (auto& a : atoms) a.weight *= c;
        return AtomicMeasure(std::move(atoms));
    }

    /// Atoms with positive weight, in input order.
    AtomicMeasure positive_part() const {
        std::vector<Atom> out;
        for (const auto& a : atoms_)
            if (a.weight > 0.0) out.push_back(a);
        return AtomicMeasure(std::move(out));
    }

    /// Atoms with negative weight, in input order, with weights negated.
    AtomicMeasure negative_part() const {
        std::vector<Atom> out;
        for (const auto& a : atoms_)
            if (a.weight < 0.0) out.push_back(Atom{a.x, -a.weight});
        return AtomicMeasure(std::move(out));
    }

private:
    std::vector<Atom> atoms_;
};

inline nlohmann::ordered_json to_json(const AtomicMeasure& nu) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& a : nu.atoms()) {
        nlohmann::ordered_json j;
        j["x"] = a.x;
        j["w"] = a.weight;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline AtomicMeasure atomic_measure_from_json(const nlohmann::ordered_json& arr) {
    std::vector<Atom> atoms;
    for (const auto& j : arr) atoms.push_back(Atom{j.at("x").get<Point>(), j.at("w").get<double>()});
    return AtomicMeasure(std::move(atoms));
}

} // namespace mcz
