import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablab.errors import CertificateError, ParseError
from stablab.words import (
    AddGenerator,
    AddRelator,
    NormalClosureCertificate,
    Presentation,
    RemoveGenerator,
    RemoveRelator,
    Word,
    apply_tietze,
    compose_transports,
    concat_reduced,
    free_reduce,
    identity_transport,
    inverse_word,
    parse_presentation,
    parse_word,
    substitute,
    verify_certificate,
    word_length,
    word_to_text,
)

ABC = ("a", "b", "c")


class TestParseWord:
    def test_commutator_literal(self):
        w = parse_word("a*b*a^-1*b^-1", ABC[:2])
        assert w.pairs == ((0, 1), (1, 1), (0, -1), (1, -1))

    def test_commutator_sugar(self):
        assert parse_word("[a,b]", ABC[:2]) == parse_word("a*b*a^-1*b^-1", ABC[:2])

    def test_reduction_at_parse(self):
        assert parse_word("a*a^-1*b", ABC[:2]).pairs == ((1, 1),)

    def test_exponents(self):
        assert parse_word("a^3", ABC).letters == (1, 1, 1)
        assert parse_word("a^-2", ABC).letters == (-1, -1)
        assert parse_word("a^0", ABC).letters == ()
        assert parse_word("(a*b)^2", ABC).letters == (1, 2, 1, 2)
        assert parse_word("(a*b)^-1", ABC).letters == (-2, -1)

    def test_nested_brackets(self):
        w = parse_word("[[a,b],c]", ABC)
        inner = parse_word("[a,b]", ABC)
        c = parse_word("c", ABC)
        assert w == inner * c * inner.inverse() * c.inverse()

    def test_whitespace_insignificant(self):
        assert parse_word(" a * b ^ -1 ", ABC) == parse_word("a*b^-1", ABC)

    @pytest.mark.parametrize(
        "text",
        ["d", "a*", "a^", "[a,b", "(a*b", "a)*b", "a b", "", "^2", "a**b"],
    )
    def test_rejects_garbage(self, text):
        with pytest.raises(ParseError):
            parse_word(text, ABC)

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_word("a*zz", ABC)
        assert err.value.position == 2


class TestFreeReduce:
    def test_cancelling_pair(self):
        assert free_reduce([(0, 1), (0, -1)]).letters == ()

    def test_inner_cancellation(self):
        assert free_reduce([(0, 1), (1, 1), (1, -1), (0, 1)]).pairs == ((0, 1), (0, 1))

    def test_reduced_input_unchanged(self):
        w = free_reduce([(0, 1), (1, -1), (0, 1)])
        assert free_reduce(w.letters).letters == w.letters

    def test_signed_letter_input(self):
        assert free_reduce([1, -1, 2]).letters == (2,)


class TestPresentation:
    def test_z2(self):
        p = parse_presentation("<a, b | [a,b]>")
        assert p.generators == ("a", "b")
        assert len(p.relators) == 1
        assert word_length(p.relators[0]) == 4

    def test_free_group(self):
        p = parse_presentation("<a | >")
        assert p.generators == ("a",)
        assert p.relators == ()

    def test_z3(self):
        p = parse_presentation("<a | a*a*a>")
        assert len(p.relators) == 1
        assert word_length(p.relators[0]) == 3

    def test_duplicate_generators_rejected(self):
        with pytest.raises(ParseError):
            parse_presentation("<a, a | >")

    def test_empty_relator_rejected(self):
        with pytest.raises(ParseError):
            parse_presentation("<a | a*a^-1>")

    def test_duplicate_relators_kept(self):
        p = parse_presentation("<a | a*a, a*a>")
        assert len(p.relators) == 2

    def test_json_roundtrip(self):
        p = parse_presentation("<a, b | [a,b], a^3>")
        assert Presentation.from_json(p.to_json()) == p

    def test_text_roundtrip(self):
        p = parse_presentation("<a, b | [a,b], (a*b)^2>")
        assert parse_presentation(p.to_text()) == p


class TestWordOps:
    def test_inverse(self):
        assert inverse_word(free_reduce([(0, 1), (1, -1)])).pairs == ((1, 1), (0, -1))

    def test_concat_with_inverse_is_empty(self):
        w = parse_word("a*b^2*a^-1", ABC)
        assert concat_reduced(w, inverse_word(w)).letters == ()

    def test_commutator_length(self):
        assert word_length(parse_word("[a,b]", ABC)) == 4

    def test_substitute(self):
        w = parse_word("a*b^-1", ABC[:2])
        images = (parse_word("c", ABC), parse_word("a*c", ABC))
        assert substitute(w, images) == parse_word("c*c^-1*a^-1", ABC)


letters_strategy = st.lists(
    st.integers(min_value=-3, max_value=3).filter(lambda x: x != 0), max_size=30
)


class TestWordProperties:
    @given(letters_strategy)
    def test_free_reduce_idempotent(self, letters):
        once = free_reduce(letters)
        assert free_reduce(once.letters) == once

    @given(letters_strategy)
    def test_no_adjacent_cancellation(self, letters):
        w = free_reduce(letters)
        assert all(x != -y for x, y in zip(w.letters, w.letters[1:]))

    @given(letters_strategy)
    def test_print_parse_roundtrip(self, letters):
        w = free_reduce(letters)
        assert parse_word(word_to_text(w, ABC), ABC) == w

    @given(letters_strategy)
    def test_inverse_involution(self, letters):
        w = free_reduce(letters)
        assert inverse_word(inverse_word(w)) == w

    @given(letters_strategy)
    def test_word_times_inverse_is_identity(self, letters):
        w = free_reduce(letters)
        assert concat_reduced(w, inverse_word(w)).letters == ()

    @given(letters_strategy, letters_strategy)
    def test_concat_is_reduced(self, xs, ys):
        w = concat_reduced(free_reduce(xs), free_reduce(ys))
        assert all(x != -y for x, y in zip(w.letters, w.letters[1:]))


class TestCertificates:
    def setup_method(self):
        self.p = parse_presentation("<a, b | [a,b], a^3>")

    def test_single_relator_certificate(self):
        cert = NormalClosureCertificate(((Word(), 0, 1),))
        assert verify_certificate(cert, self.p.relators[0], self.p)

    def test_empty_certificate_proves_empty_word(self):
        assert verify_certificate(NormalClosureCertificate(()), Word(), self.p)

    def test_inverted_target_fails(self):
        cert = NormalClosureCertificate(((Word(), 0, 1),))
        assert not verify_certificate(cert, self.p.relators[0].inverse(), self.p)

    def test_inverse_sign(self):
        cert = NormalClosureCertificate(((Word(), 0, -1),))
        assert verify_certificate(cert, self.p.relators[0].inverse(), self.p)

    def test_conjugated_product(self):
        u = parse_word("a*b", self.p.generators)
        target = u * self.p.relators[1] * u.inverse() * self.p.relators[0]
        cert = NormalClosureCertificate(((u, 1, 1), (Word(), 0, 1)))
        assert verify_certificate(cert, target, self.p)

    def test_invalid_relator_index(self):
        cert = NormalClosureCertificate(((Word(), 5, 1),))
        with pytest.raises(CertificateError):
            verify_certificate(cert, Word(), self.p)

    def test_bad_sign_rejected(self):
        with pytest.raises(CertificateError):
            NormalClosureCertificate(((Word(), 0, 2),))


def _relator_key(p: Presentation):
    return sorted(r.letters for r in p.relators)


class TestTietze:
    def setup_method(self):
        self.p = parse_presentation("<a, b | [a,b]>")

    def test_add_generator(self):
        move = AddGenerator("c", parse_word("a*b", self.p.generators))
        q, forward, backward = apply_tietze(self.p, move)
        assert q.generators == ("a", "b", "c")
        assert len(q.relators) == 2
        # new relator c * (a*b)^-1
        assert q.relators[1] == parse_word("c*(a*b)^-1", q.generators)
        assert forward.words[2] == parse_word("a*b", self.p.generators)
        assert backward.words == (Word((1,)), Word((2,)))

    def test_add_relator_with_certificate(self):
        u = parse_word("a", self.p.generators)
        target = u * self.p.relators[0] * u.inverse()
        cert = NormalClosureCertificate(((u, 0, 1),))
        q, forward, backward = apply_tietze(self.p, AddRelator(target, cert))
        assert len(q.relators) == 2
        assert forward.words == backward.words == identity_transport(2).words

    def test_add_relator_bad_certificate(self):
        cert = NormalClosureCertificate(((Word(), 0, -1),))
        with pytest.raises(CertificateError):
            apply_tietze(self.p, AddRelator(self.p.relators[0], cert))

    def test_remove_relator_roundtrip(self):
        u = parse_word("b", self.p.generators)
        extra = u * self.p.relators[0] * u.inverse()
        cert = NormalClosureCertificate(((u, 0, 1),))
        q, _, _ = apply_tietze(self.p, AddRelator(extra, cert))
        # removing it again needs a certificate over the remaining relator
        back, _, _ = apply_tietze(q, RemoveRelator(1, cert))
        assert back == self.p

    def test_remove_generator_roundtrip(self):
        move = AddGenerator("c", parse_word("a*b", self.p.generators))
        q, _, _ = apply_tietze(self.p, move)
        r, _, _ = apply_tietze(q, RemoveGenerator(2, 1))
        assert r.generators == self.p.generators
        assert _relator_key(r) == _relator_key(self.p)

    def test_remove_generator_requires_defining_shape(self):
        q = parse_presentation("<a, b | a*b*a^-1*b^-1>")
        with pytest.raises(ValueError):
            apply_tietze(q, RemoveGenerator(0, 0))

    def test_remove_generator_rejects_reuse_elsewhere(self):
        q = parse_presentation("<a, b, c | c*(a*b)^-1, c^2>")
        with pytest.raises(ValueError):
            apply_tietze(q, RemoveGenerator(2, 0))

    def test_forward_backward_transport_identity(self):
        move = AddGenerator("c", parse_word("a*b", self.p.generators))
        _, forward, backward = apply_tietze(self.p, move)
        # substituting forward words into backward words gives back each
        # original generator letter for letter
        roundtrip = compose_transports(forward, backward)
        assert roundtrip.words == (Word((1,)), Word((2,)))

    def test_compose_transports_over_two_moves(self):
        move1 = AddGenerator("c", parse_word("a*b", self.p.generators))
        q, f1, _ = apply_tietze(self.p, move1)
        move2 = AddGenerator("d", parse_word("c*a", q.generators))
        r, f2, _ = apply_tietze(q, move2)
        total = compose_transports(f1, f2)
        assert r.generators == ("a", "b", "c", "d")
        # d was defined as c*a with c = a*b, so over p it reads a*b*a
        assert total.words[3] == parse_word("a*b*a", self.p.generators)
