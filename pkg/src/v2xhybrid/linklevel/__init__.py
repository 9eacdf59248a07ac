from .ber import ber_trial, uncoded_awgn_ber
from .ldpc import LDPCCode
from .modem import ofdm_demodulate, ofdm_modulate, qpsk_llr, qpsk_map

__all__ = ["LDPCCode", "ber_trial", "ofdm_demodulate", "ofdm_modulate", "qpsk_llr", "qpsk_map",
           "uncoded_awgn_ber"]
