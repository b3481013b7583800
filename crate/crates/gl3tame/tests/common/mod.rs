pub mod brauer;
