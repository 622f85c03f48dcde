//! Coalition-aware day-ahead market clearing for neighborhoods of home
//! microgrids (H-MGs).

pub mod lp;
pub mod clearing;
pub mod devices;
pub mod kkt;
pub mod model;
pub mod coalition;
pub mod io;
