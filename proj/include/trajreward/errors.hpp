// Copyright 2026 The trajreward Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJREWARD__ERRORS_HPP_
#define TRAJREWARD__ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajreward
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Brute-force Fréchet enumeration was asked for more points than it can enumerate.
class InstanceTooLarge : public Error
{
public:
  using Error::Error;
};

/// An aggregate was requested over zero records.
class EmptyInput : public Error
{
public:
  using Error::Error;
};

/// Group-relative normalization needs at least two outputs.
class GroupTooSmall : public Error
{
public:
  using Error::Error;
};

class UnknownToken : public Error
{
public:
  using Error::Error;
};

/// A success rule needs a trial outcome that the record does not carry.
class MissingTrialFact : public Error
{
public:
  using Error::Error;
};

/// Invalid configuration value or configuration file.
class ConfigError : public Error
{
public:
  using Error::Error;
};

}  // namespace trajreward

#endif  // TRAJREWARD__ERRORS_HPP_
