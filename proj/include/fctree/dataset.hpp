#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fctree/expr.hpp"

namespace fctree {

struct BuiltFeature {
    ExprPtr expr; // stored canonicalized
    std::vector<double> values;
};

// Column-major labeled table. Immutable after load except the built-feature
// pool, whose appends must be serialized by the caller (single writer);
// concurrent readers are safe.
class Dataset {
public:
    Schema schema; // raw feature columns
    std::vector<std::vector<double>> columns;
    std::vector<int8_t> labels;   // 0 background, 1 signal
    std::vector<double> weights;  // nonnegative, default 1
    std::vector<BuiltFeature> built;

    size_t n_rows() const { return labels.size(); }

    std::span<const double> column(int id) const { return columns[static_cast<size_t>(id)]; }

    // Canonicalizes, dedups against the pool, materializes over all rows.
    // Returns the pool id (existing id on a duplicate).
    int append_built_feature(const ExprPtr& expr, double div_epsilon = kDivEpsilon);

    // Throws DataError when a Dataset invariant is violated.
    void validate(bool require_both_classes) const;

    // Copies the selected rows; raw columns, labels, weights. Empty pool.
    Dataset subset(std::span<const int> rows) const;

    std::vector<int> all_rows() const;
};

// Generic delimited input with a units sidecar (one "column=unit" line per
// feature column). The data file needs a "label" column in {0,1}; a "weight"
// column is optional.
Dataset load_csv(const std::string& data_path, const std::string& units_path);

void save_csv(const Dataset& ds, const std::string& data_path, const std::string& units_path);

struct HiggsOptions {
    long subsample = -1; // keep everything when negative
    uint64_t seed = 0;   // subsample shuffle seed
    bool use_weights = false;
    bool impute_median = true; // -999.0 sentinel handling; false keeps raw values
    bool eta_as_angle = true;  // pseudorapidity unit mapping
};

// The public challenge layout (EventId, DER_*, 17 PRI_*, Weight, Label).
// Keeps exactly the PRI_* columns; label s -> 1, b -> 0.
Dataset load_higgs(const std::string& path, const HiggsOptions& options = {});

struct DvcsGenParams {
    long n_events = 0;
    double beam_energy_gev = 10.6;
    double smear_sigma_rel = 0.02;
    double signal_fraction = 0.5;
    uint64_t seed = 0;
};

// Synthetic fixed-target generator. Signal: exclusive (e', p, gamma) final
// state balancing the beam exactly before smearing. Background: the photon is
// replaced by a pi0 decayed isotropically into two photons, and only the
// higher-energy one is recorded as gamma1. Nine GeV-power-1 columns:
// p{x,y,z}_{e,p,g1}.
Dataset generate_dvcs(const DvcsGenParams& params);

// Disjoint seeded partition; train gets floor(n * train_fraction) rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             uint64_t seed);

} // namespace fctree
