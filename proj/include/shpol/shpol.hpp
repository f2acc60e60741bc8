#pragma once

#include "shpol/channel.hpp"
#include "shpol/config.hpp"
#include "shpol/controller.hpp"
#include "shpol/errors.hpp"
#include "shpol/jones.hpp"
#include "shpol/link.hpp"
#include "shpol/receiver.hpp"
#include "shpol/waveform.hpp"
