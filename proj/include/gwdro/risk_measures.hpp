#pragma once

#include "gwdro/domain.hpp"

namespace gwdro {

class ScalarDistribution {
public:
    ScalarDistribution(Vec values, Vec weights);
    static ScalarDistribution uniform(Vec values);

    const Vec& values() const { return values_; }
    const Vec& weights() const { return weights_; }
    std::size_t size() const { return values_.size(); }
    double mean() const;
    double min() const;  // over atoms with positive weight
    double max() const;

private:
    Vec values_;
    Vec weights_;
};

double value_at_risk(const ScalarDistribution& X, double alpha);
double cvar(const ScalarDistribution& X, double alpha);
double cvar_tail_average(const ScalarDistribution& X, double alpha);
// inf_t { t + E[(X − t)+]/(1 − α) }, minimised over the support values.
double cvar_minimization(const ScalarDistribution& X, double alpha);
double expectile(const ScalarDistribution& X, double alpha);
double ess_sup(const ScalarDistribution& X);
double evaluate(const RiskSpec& spec, const ScalarDistribution& X);

}  // namespace gwdro
