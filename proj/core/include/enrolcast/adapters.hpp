#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "enrolcast/arima.hpp"
#include "enrolcast/forecast.hpp"
#include "enrolcast/protocol.hpp"

namespace enrolcast {

namespace detail {
class ChildProcess;
}

enum class Transport { in_process, child_process };

struct AdapterDescriptor {
  std::string name;
  Transport transport = Transport::in_process;
  std::optional<std::string> command;
  int timeout_seconds = 30;
  bool supports_covariates = false;
  /// Wrap the adapter in the residual-covariate model.
  bool residual_covariates = false;
  /// Built-in model to instantiate for in-process descriptors
  /// ("persistence" or "arima"); defaults to `name`.
  std::string model;

  void require_valid() const;
};

/// Descriptor timeout unless ENROLCAST_ADAPTER_TIMEOUT (seconds) is set.
double effective_timeout_seconds(const AdapterDescriptor& d);

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual const std::string& name() const = 0;
  virtual bool supports_covariates() const = 0;
  /// Raw adapter output; use `forecast` for the checked contract.
  virtual QuantileForecast predict(const ForecastRequest& req) = 0;
};

/// Request validation, adapter call, then reply checks: one step per
/// horizon, finite values, exactly the requested levels, monotone
/// quantiles after repair.
QuantileForecast forecast(Forecaster& adapter, const ForecastRequest& req,
                          double repair_tolerance = 1e-6);

/// Pool-adjacent-violators repair of small crossings. Crossings larger
/// than tolerance * scale raise InvalidQuantiles, where scale is the
/// spread of the quantile values (or max(|median|, 1) when they coincide).
std::map<double, double> repair_quantiles(const std::map<double, double>& q,
                                          double tolerance = 1e-6);

/// Checks `fc` against `req` and repairs crossings in place.
void conform_forecast(QuantileForecast& fc, const ForecastRequest& req,
                      double repair_tolerance = 1e-6);

class PersistenceForecaster : public Forecaster {
 public:
  explicit PersistenceForecaster(std::string name = "persistence");
  const std::string& name() const override { return name_; }
  bool supports_covariates() const override { return false; }
  QuantileForecast predict(const ForecastRequest& req) override;

 private:
  std::string name_;
};

struct ArimaAdapterOptions {
  std::vector<ArimaOrder> grid = default_order_grid();
  ArimaOptions fit;
  bool use_covariates = false;
};

/// Order selection and refit on every request. With covariates enabled
/// the fit uses the trailing run of years where every covariate is
/// present, and future covariate values are held at their last value.
class ArimaForecaster : public Forecaster {
 public:
  explicit ArimaForecaster(std::string name = "arima", ArimaAdapterOptions options = {});
  const std::string& name() const override { return name_; }
  bool supports_covariates() const override { return options_.use_covariates; }
  QuantileForecast predict(const ForecastRequest& req) override;

 private:
  std::string name_;
  ArimaAdapterOptions options_;
};

/// One serially-used session with an external adapter process. The
/// process is started lazily, restarted after a failure, and killed on
/// timeout.
class ChildProcessSession {
 public:
  explicit ChildProcessSession(AdapterDescriptor descriptor,
                               std::map<std::string, std::string> env = {});
  ~ChildProcessSession();
  ChildProcessSession(const ChildProcessSession&) = delete;
  ChildProcessSession& operator=(const ChildProcessSession&) = delete;

  /// Starts the process if needed and returns its handshake.
  const Handshake& handshake();
  /// Sends one line and waits for one reply line. Throws AdapterTimeout.
  std::string exchange(const std::string& line);
  void reset();

  const AdapterDescriptor& descriptor() const { return descriptor_; }

 private:
  void start();

  AdapterDescriptor descriptor_;
  std::map<std::string, std::string> env_;
  std::unique_ptr<detail::ChildProcess> proc_;
  std::optional<Handshake> handshake_;
};

class ChildProcessForecaster : public Forecaster {
 public:
  explicit ChildProcessForecaster(AdapterDescriptor descriptor,
                                  std::map<std::string, std::string> env = {});
  const std::string& name() const override { return name_; }
  bool supports_covariates() const override;
  QuantileForecast predict(const ForecastRequest& req) override;

 private:
  std::string name_;
  ChildProcessSession session_;
};

/// Adds a least-squares model of the base adapter's one-step residuals on
/// contemporaneous covariates (with intercept). Historical residuals come
/// from replaying the base on expanding prefixes of the request history.
class ResidualCovariateWrapper : public Forecaster {
 public:
  explicit ResidualCovariateWrapper(std::shared_ptr<Forecaster> base,
                                    std::string name = {});
  const std::string& name() const override { return name_; }
  bool supports_covariates() const override { return true; }
  QuantileForecast predict(const ForecastRequest& req) override;

 private:
  std::shared_ptr<Forecaster> base_;
  std::string name_;
};

std::shared_ptr<Forecaster> residual_covariate_wrap(std::shared_ptr<Forecaster> base);

/// Instantiate the adapter a descriptor names. `env` is passed to child
/// processes in addition to the inherited environment.
std::shared_ptr<Forecaster> make_forecaster(const AdapterDescriptor& d,
                                            const std::map<std::string, std::string>& env = {});

}  // namespace enrolcast
