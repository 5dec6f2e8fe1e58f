/*
 * Copyright 2026 The SOAP-AP Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SOAP_ERROR_HPP_
#define SOAP_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soap {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, violated preconditions, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A metric has no defined value for the input (e.g. AP without positives).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// NaN / infinite inputs or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Division by a zero (or negative) denominator in f(s) = -s1/s2 and friends.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace soap

#endif  // SOAP_ERROR_HPP_
