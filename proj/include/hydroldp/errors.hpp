#pragma once

#include <stdexcept>
#include <string>

namespace hydroldp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
public:
    using Error::Error;
};

class InvalidField : public Error {
public:
    using Error::Error;
};

class MissingBoundaryCondition : public Error {
public:
    using Error::Error;
};

class ParabolicityViolation : public Error {
public:
    ParabolicityViolation(const std::string& what, double nu) : Error(what), nu_(nu) {}
    double nu() const { return nu_; }

private:
    double nu_;
};

class ModeMismatch : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

// Thrown when a state stops being finite or its norm runs away.
class BlowupDetected : public Error {
public:
    BlowupDetected(const std::string& term, long step, double time)
        : Error("blowup in " + term + " at step " + std::to_string(step)), term_(term), step_(step),
          time_(time) {}
    const std::string& term() const { return term_; }
    long step() const { return step_; }
    double time() const { return time_; }

private:
    std::string term_;
    long step_;
    double time_;
};

class ControlBudgetExceeded : public Error {
public:
    ControlBudgetExceeded(double cost, double budget)
        : Error("control cost " + std::to_string(cost) + " exceeds budget " + std::to_string(budget)),
          cost_(cost), budget_(budget) {}
    double cost() const { return cost_; }
    double budget() const { return budget_; }

private:
    double cost_;
    double budget_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Optimizer stopped without meeting its tolerance.
class Diverged : public Error {
public:
    Diverged(const std::string& what, int iterations) : Error(what), iterations_(iterations) {}
    int iterations() const { return iterations_; }

private:
    int iterations_;
};

}  // namespace hydroldp
