#pragma once

#include "jmcert/errors.hpp"
#include "jmcert/linalg.hpp"
#include "jmcert/channels.hpp"
#include "jmcert/measurements.hpp"
#include "jmcert/certifier.hpp"
#include "jmcert/fock.hpp"
#include "jmcert/oracle.hpp"
#include "jmcert/io.hpp"
#include "jmcert/cli.hpp"
