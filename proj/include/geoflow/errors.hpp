#ifndef GEOFLOW_ERRORS_HPP
#define GEOFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace geoflow {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise malformed numeric input.
class input_error : public error {
public:
    using error::error;
};

/// Matrix/vector shape does not match the operation's contract.
class dimension_error : public error {
public:
    using error::error;
};

/// Data rank is below what the requested decomposition needs.
class rank_error : public error {
public:
    rank_error(const std::string& what, int achievable)
        : error(what), achievable_rank(achievable) {}
    int achievable_rank;
};

/// GFK dimensionality constraint d <= D - d violated.
class unsupported_dimension_error : public error {
public:
    using error::error;
};

/// A feature with zero variance where a positive scale is required.
class degenerate_feature_error : public error {
public:
    degenerate_feature_error(const std::string& what, int feature)
        : error(what), feature_index(feature) {}
    int feature_index;
};

/// select_mix scanned the whole grid without meeting the threshold.
class selection_failure_error : public error {
public:
    selection_failure_error(const std::string& what, double best)
        : error(what), best_cosine(best) {}
    double best_cosine;
};

/// Training set contains fewer than two classes.
class degenerate_training_error : public error {
public:
    using error::error;
};

/// Morph parameter below the admissible floor.
class excluded_configuration_error : public error {
public:
    using error::error;
};

/// Damage patch contains no element centroid.
class empty_patch_error : public error {
public:
    using error::error;
};

/// Requested FRF band exceeds the available modal coverage.
class coverage_error : public error {
public:
    using error::error;
};

/// Config file parse or validation failure.
class config_error : public error {
public:
    using error::error;
};

/// Missing or malformed dataset files.
class data_error : public error {
public:
    using error::error;
};

} // namespace geoflow

#endif
