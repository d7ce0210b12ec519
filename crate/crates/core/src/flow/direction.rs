use crate::packet::PacketRecord;

/// Serial-number comparison on 32-bit TCP sequence space: `a <= b`.
pub fn serial_le(a: u32, b: u32) -> bool {
    b.wrapping_sub(a) as i32 >= 0
}

/// Finalized inter-packet arrival time statistics, whole milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IatSummary {
    pub min: u64,
    pub max: u64,
    pub avg: u64,
    pub stddev: u64,
}

/// Per-direction accumulator.
#[derive(Debug, Clone, Default)]
pub struct DirectionState {
    pub pkts: u64,
    /// Sum of IP total lengths.
    pub bytes: u64,
    pub first_ts_micros: u64,
    /// Newest timestamp seen in this direction.
    pub last_seen_micros: u64,
    /// Timestamp of the previous packet in arrival order (drives IAT).
    pub last_ts_micros: u64,

    pub iat_count: u64,
    pub iat_min_ms: f64,
    pub iat_max_ms: f64,
    pub iat_mean_ms: f64,
    /// Welford running sum of squared deviations from the mean.
    pub iat_m2: f64,

    pub highest_seq_end: Option<u32>,
    pub retrans_pkts: u64,
    /// Sum of IP total lengths of retransmitted segments.
    pub retrans_bytes: u64,
    pub tcp_flags_cum: u8,
    pub max_window: u16,
}

impl DirectionState {
    /// Account one packet travelling in this direction.
    pub fn record(&mut self, pkt: &PacketRecord) {
        if self.pkts == 0 {
            self.first_ts_micros = pkt.ts_micros;
            self.last_seen_micros = pkt.ts_micros;
        } else {
            self.first_ts_micros = self.first_ts_micros.min(pkt.ts_micros);
            self.last_seen_micros = self.last_seen_micros.max(pkt.ts_micros);
        }
        self.update_iat(pkt.ts_micros);
        self.pkts += 1;
        self.bytes += u64::from(pkt.ip_total_len);

        if pkt.is_tcp() {
            self.tcp_flags_cum |= pkt.tcp_flags;
            self.max_window = self.max_window.max(pkt.tcp_window);
            if pkt.payload_len > 0 && self.detect_retransmission(pkt.tcp_seq, pkt.payload_len) {
                self.retrans_pkts += 1;
                self.retrans_bytes += u64::from(pkt.ip_total_len);
            }
        }
    }

    /// Fold the gap since the previous packet into the running statistics.
    /// Must be called before `pkts` is incremented for this packet.
    pub fn update_iat(&mut self, ts_micros: u64) {
        if self.pkts > 0 {
            // Out-of-order arrivals count as a zero gap.
            let gap_ms = ts_micros.saturating_sub(self.last_ts_micros) as f64 / 1000.0;
            self.iat_count += 1;
            if self.iat_count == 1 {
                self.iat_min_ms = gap_ms;
                self.iat_max_ms = gap_ms;
            } else {
                self.iat_min_ms = self.iat_min_ms.min(gap_ms);
                self.iat_max_ms = self.iat_max_ms.max(gap_ms);
            }
            let delta = gap_ms - self.iat_mean_ms;
            self.iat_mean_ms += delta / self.iat_count as f64;
            self.iat_m2 += delta * (gap_ms - self.iat_mean_ms);
        }
        self.last_ts_micros = ts_micros;
    }

    /// Population standard deviation of the gaps, in milliseconds.
    pub fn iat_stddev_ms(&self) -> f64 {
        if self.iat_count == 0 {
            0.0
        } else {
            (self.iat_m2.max(0.0) / self.iat_count as f64).sqrt()
        }
    }

    pub fn iat_summary(&self) -> IatSummary {
        if self.iat_count == 0 {
            return IatSummary::default();
        }
        IatSummary {
            min: self.iat_min_ms.round() as u64,
            max: self.iat_max_ms.round() as u64,
            avg: self.iat_mean_ms.round() as u64,
            stddev: self.iat_stddev_ms().round() as u64,
        }
    }

    /// True when the segment's data is entirely below the sequence horizon;
    /// otherwise the horizon advances to the segment end.
    pub fn detect_retransmission(&mut self, seq: u32, payload_len: u16) -> bool {
        let end = seq.wrapping_add(u32::from(payload_len));
        match self.highest_seq_end {
            Some(horizon) if serial_le(end, horizon) => true,
            _ => {
                self.highest_seq_end = Some(end);
                false
            }
        }
    }

    /// Milliseconds between the first and newest packet, using truncated
    /// millisecond timestamps.
    pub fn duration_ms(&self) -> u64 {
        if self.pkts == 0 {
            0
        } else {
            self.last_seen_micros / 1000 - self.first_ts_micros / 1000
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feed(times_ms: &[u64]) -> DirectionState {
        let mut d = DirectionState::default();
        for &t in times_ms {
            d.update_iat(t * 1000);
            d.pkts += 1;
        }
        d
    }

    #[test]
    fn three_packets() {
        let d = feed(&[0, 10, 30]);
        assert_eq!(d.iat_count, 2);
        assert_eq!(d.iat_summary(), IatSummary { min: 10, max: 20, avg: 15, stddev: 5 });
    }

    #[test]
    fn single_packet_has_no_gap() {
        let d = feed(&[42]);
        assert_eq!(d.iat_count, 0);
        assert_eq!(d.iat_summary(), IatSummary::default());
    }

    #[test]
    fn constant_gaps() {
        let d = feed(&[0, 10, 20, 30]);
        assert_eq!(d.iat_summary(), IatSummary { min: 10, max: 10, avg: 10, stddev: 0 });
    }

    #[test]
    fn out_of_order_gap_is_zero() {
        let d = feed(&[100, 50, 60]);
        assert_eq!(d.iat_min_ms, 0.0);
        assert_eq!(d.iat_max_ms, 10.0);
    }

    #[test]
    fn retransmission_examples() {
        let mut d = DirectionState { highest_seq_end: Some(1000), ..Default::default() };
        assert!(d.detect_retransmission(950, 50));
        assert_eq!(d.highest_seq_end, Some(1000));
        assert!(!d.detect_retransmission(1000, 100));
        assert_eq!(d.highest_seq_end, Some(1100));

        let mut fresh = DirectionState::default();
        assert!(!fresh.detect_retransmission(1, 10));
        assert_eq!(fresh.highest_seq_end, Some(11));
    }

    #[test]
    fn retransmission_across_wrap() {
        let mut d = DirectionState::default();
        assert!(!d.detect_retransmission(u32::MAX - 9, 20)); // horizon wraps to 10
        assert_eq!(d.highest_seq_end, Some(10));
        assert!(d.detect_retransmission(u32::MAX - 9, 20));
        assert!(!d.detect_retransmission(10, 5));
    }

    #[test]
    fn serial_ordering() {
        assert!(serial_le(5, 5));
        assert!(serial_le(u32::MAX, 3));
        assert!(!serial_le(3, u32::MAX));
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(gaps in prop::collection::vec(0u64..5_000_000, 1..200)) {
            let mut t = 0u64;
            let mut d = DirectionState::default();
            d.update_iat(0);
            d.pkts += 1;
            for g in &gaps {
                t += g;
                d.update_iat(t);
                d.pkts += 1;
            }
            let ms: Vec<f64> = gaps.iter().map(|&g| g as f64 / 1000.0).collect();
            let n = ms.len() as f64;
            let mean = ms.iter().sum::<f64>() / n;
            let m2: f64 = ms.iter().map(|x| (x - mean).powi(2)).sum();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!(mean == 0.0 || rel(d.iat_mean_ms, mean) < 1e-9);
            prop_assert!(m2 < 1e-6 || rel(d.iat_m2, m2) < 1e-9, "{} vs {}", d.iat_m2, m2);
            prop_assert!(d.iat_m2 >= 0.0);
            prop_assert!(d.iat_min_ms <= d.iat_mean_ms + 1e-9 && d.iat_mean_ms <= d.iat_max_ms + 1e-9);
            let s = d.iat_summary();
            prop_assert!(s.min <= s.avg && s.avg <= s.max);
            prop_assert!(s.stddev <= s.max - s.min);
        }
    }
}
