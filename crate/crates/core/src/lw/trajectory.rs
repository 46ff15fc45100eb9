//! Sampled worldlines with piecewise-cubic Hermite interpolation.

use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::state::SpatialState;

/// A time-ordered sampled worldline.
///
/// Between samples the position is the cubic Hermite interpolant matching
/// positions and velocities at both ends, so positions are C¹ in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<SpatialState>,
    c: f64,
}

/// One interpolation interval.
#[derive(Debug, Clone, Copy)]
pub struct HermiteSegment {
    pub t0: f64,
    pub h: f64,
    pub p0: Vector3<f64>,
    pub p1: Vector3<f64>,
    pub v0: Vector3<f64>,
    pub v1: Vector3<f64>,
}

impl HermiteSegment {
    fn from_states(a: &SpatialState, b: &SpatialState) -> Self {
        Self {
            t0: a.t,
            h: b.t - a.t,
            p0: a.x,
            p1: b.x,
            v0: a.v,
            v1: b.v,
        }
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let s = (t - self.t0) / self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.p0 * h00 + self.v0 * (h10 * self.h) + self.p1 * h01 + self.v1 * (h11 * self.h)
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        let s = (t - self.t0) / self.h;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d11 = 3.0 * s2 - 2.0 * s;
        (self.p0 - self.p1) * (d00 / self.h) + self.v0 * d10 + self.v1 * d11
    }

    pub fn acceleration(&self, t: f64) -> Vector3<f64> {
        let s = (t - self.t0) / self.h;
        let h2 = self.h * self.h;
        (self.p0 - self.p1) * ((12.0 * s - 6.0) / h2)
            + self.v0 * ((6.0 * s - 4.0) / self.h)
            + self.v1 * ((6.0 * s - 2.0) / self.h)
    }

    /// Bézier control points of the (quadratic) velocity curve.
    fn velocity_control_points(&self) -> [Vector3<f64>; 3] {
        let mid = (self.p1 - self.p0) * (3.0 / self.h) - self.v0 - self.v1;
        [self.v0, mid, self.v1]
    }

    /// True when the interpolated speed stays below `c` on the whole interval.
    pub fn is_subluminal(&self, c: f64) -> bool {
        quadratic_inside_ball(self.velocity_control_points(), c * c, 0)
    }
}

// The ball is convex, so a quadratic Bézier curve lies inside it when all
// three control points do. Otherwise subdivide; curve points outside fail.
fn quadratic_inside_ball(cp: [Vector3<f64>; 3], c2: f64, depth: u32) -> bool {
    let [a, b, c] = cp;
    if a.norm_squared() >= c2 || c.norm_squared() >= c2 {
        return false;
    }
    if b.norm_squared() < c2 {
        return true;
    }
    if depth >= 24 {
        return false;
    }
    let ab = (a + b) * 0.5;
    let bc = (b + c) * 0.5;
    let mid = (ab + bc) * 0.5;
    quadratic_inside_ball([a, ab, mid], c2, depth + 1)
        && quadratic_inside_ball([mid, bc, c], c2, depth + 1)
}

impl Trajectory {
    /// Validates and wraps samples: nonempty, finite, strictly increasing
    /// times, and subluminal both at and between samples.
    pub fn new(samples: Vec<SpatialState>, c: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidTrajectory("no samples".into()));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidTrajectory(format!("speed of light must be positive, got {c}")));
        }
        let mut traj = Trajectory {
            samples: Vec::with_capacity(samples.len()),
            c,
        };
        for s in samples {
            traj.push(s)?;
        }
        Ok(traj)
    }

    /// A single-sample trajectory (the initial state of an integration).
    pub fn starting_at(state: SpatialState, c: f64) -> Result<Self> {
        Self::new(vec![state], c)
    }

    /// Appends a sample later than every existing one.
    pub fn push(&mut self, s: SpatialState) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::InvalidTrajectory(format!("non-finite sample at t = {}", s.t)));
        }
        if !(s.v.norm() < self.c) {
            return Err(Error::InvalidTrajectory(format!(
                "speed {} m/s at t = {} s is not below c",
                s.v.norm(),
                s.t
            )));
        }
        if let Some(last) = self.samples.last() {
            if !(s.t > last.t) {
                return Err(Error::InvalidTrajectory(format!(
                    "sample times must increase strictly ({} after {})",
                    s.t, last.t
                )));
            }
            if !HermiteSegment::from_states(last, &s).is_subluminal(self.c) {
                return Err(Error::InvalidTrajectory(format!(
                    "interpolated speed reaches c between t = {} and t = {}",
                    last.t, s.t
                )));
            }
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn samples(&self) -> &[SpatialState] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn first(&self) -> &SpatialState {
        &self.samples[0]
    }

    pub fn last(&self) -> &SpatialState {
        &self.samples[self.samples.len() - 1]
    }

    pub fn segment(&self, i: usize) -> HermiteSegment {
        HermiteSegment::from_states(&self.samples[i], &self.samples[i + 1])
    }

    pub fn num_segments(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    fn out_of_span(&self) -> Error {
        Error::InsufficientHistory {
            start: self.start(),
            end: self.end(),
        }
    }

    /// Index of the interval containing `t`.
    pub fn locate(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) || self.samples.len() < 2 {
            return Err(self.out_of_span());
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        Ok(idx.saturating_sub(1).min(self.samples.len() - 2))
    }

    /// Interpolated state at time `t`, which must lie in the sampled span.
    pub fn state_at(&self, t: f64) -> Result<SpatialState> {
        if self.samples.len() == 1 && t == self.start() {
            return Ok(self.samples[0]);
        }
        let seg = self.segment(self.locate(t)?);
        Ok(SpatialState::new(t, seg.position(t), seg.velocity(t)))
    }

    /// Writes `t,x,y,z,vx,vy,vz` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["t", "x", "y", "z", "vx", "vy", "vz"]).map_err(io)?;
        for s in &self.samples {
            let row = [s.t, s.x.x, s.x.y, s.x.z, s.v.x, s.v.y, s.v.z].map(|v| format!("{v:.16e}"));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads the CSV exchange format; the header must be exactly
    /// `t,x,y,z,vx,vy,vz`.
    pub fn read_csv<R: Read>(reader: R, c: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r
            .headers()
            .map_err(|e| Error::MalformedConfig { line: 1, message: e.to_string() })?
            .clone();
        let expected = ["t", "x", "y", "z", "vx", "vy", "vz"];
        if header.iter().map(str::trim).ne(expected) {
            return Err(Error::MalformedConfig {
                line: 1,
                message: format!("expected header {}", expected.join(",")),
            });
        }
        let mut samples = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::MalformedConfig { line, message: e.to_string() })?;
            if rec.len() != 7 {
                return Err(Error::MalformedConfig {
                    line,
                    message: format!("expected 7 fields, got {}", rec.len()),
                });
            }
            let mut vals = [0.0; 7];
            for (slot, field) in vals.iter_mut().zip(rec.iter()) {
                *slot = field.trim().parse().map_err(|_| Error::MalformedConfig {
                    line,
                    message: format!("`{field}` is not a number"),
                })?;
            }
            samples.push(SpatialState::new(
                vals[0],
                Vector3::new(vals[1], vals[2], vals[3]),
                Vector3::new(vals[4], vals[5], vals[6]),
            ));
        }
        Self::new(samples, c)
    }
}
