#ifndef FSO_RELAY_FSO_RELAY_HPP
#define FSO_RELAY_FSO_RELAY_HPP

#include "capacity_placement.hpp"
#include "channel_model.hpp"
#include "errors.hpp"
#include "link_params.hpp"
#include "random_streams.hpp"
#include "relay_chain.hpp"

#endif
