// Copyright 2026 The iterlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace iterlab {

/// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (empty text, bad batch size...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyAfterFilter : public Error {
 public:
  EmptyAfterFilter() : Error("no tasks left after filtering") {}
};

// prompt-engine

class MissingField : public Error {
 public:
  explicit MissingField(std::string name)
      : Error("missing field: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class TechniqueDomainMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownTechnique : public Error {
 public:
  using Error::Error;
};

// llm-gateway

class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Transient failures persisted through every allowed attempt.
class ProviderExhausted : public GatewayError {
 public:
  ProviderExhausted(int attempts, const std::string& last)
      : GatewayError("provider exhausted after " + std::to_string(attempts) +
                     " attempts: " + last),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class ContentFilterBlocked : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// Non-retryable provider rejection (4xx other than 429) or unparseable body.
class ProviderError : public GatewayError {
 public:
  ProviderError(int status, const std::string& what)
      : GatewayError(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class JudgePayloadTooLarge : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Network-level failure (connect, timeout). Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// metrics-engine

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("cosine distance of an all-zero vector") {}
};

// protocol-runner

class PlanInvalid : public Error {
 public:
  using Error::Error;
};

// evaluators

class JudgeUnavailable : public Error {
 public:
  using Error::Error;
};

class MalformedJudgeOutput : public Error {
 public:
  enum class Reason { kBadJson, kWrongCount, kMissingKey, kOutOfRange };

  MalformedJudgeOutput(Reason reason, const std::string& detail)
      : Error(std::string(reason_name(reason)) + ": " + detail),
        reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

  static const char* reason_name(Reason r) {
    switch (r) {
      case Reason::kBadJson: return "bad-json";
      case Reason::kWrongCount: return "wrong-count";
      case Reason::kMissingKey: return "missing-key";
      case Reason::kOutOfRange: return "out-of-range";
    }
    return "unknown";
  }

 private:
  Reason reason_;
};

// report-cli

class UnknownMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace iterlab
